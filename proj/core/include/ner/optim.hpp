#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ner/model.hpp"

namespace ner {

struct AdamWHyper {
  double lr = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

struct OptimizerState {
  // Moment tensors aligned with named_tensors() order.
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long t = 0;
};

OptimizerState make_optimizer_state(const ModelParams& params);

// One decoupled-weight-decay step on a single tensor:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr (mhat / (sqrt(vhat) + eps) + lambda theta)
// t is the already-incremented step count. The decay term uses the
// pre-update theta and never enters m/v.
void adamw_step_tensor(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                       long t, const AdamWHyper& hyper);

// Applies adamw_step_tensor to every parameter tensor, advancing state.t.
// Throws std::invalid_argument on non-finite gradient entries.
void adamw_step(ModelParams& params, ModelParams& grads, OptimizerState& state,
                const AdamWHyper& hyper);

struct BackwardResult {
  ModelParams grads;
  double loss = 0.0;
};

// Analytic gradients of the mean cross-entropy over non-IGNORE positions
// with respect to every parameter tensor. Pass an rng to fix the dropout
// mask in train mode; with train_mode false the path is deterministic.
BackwardResult backward(const ModelParams& params, const ModelConfig& config,
                        std::span<const EncodedSentence> batch,
                        bool train_mode = false,
                        std::mt19937_64* rng = nullptr);

// Central-difference gradient of an arbitrary scalar function of the
// parameters, sampled at the given flat coordinates of one tensor.
// Test oracle for backward().
std::vector<double> finite_diff_grad(
    const std::function<double(const ModelParams&)>& loss_fn,
    ModelParams& params, const std::string& tensor_name,
    std::span<const std::size_t> coords, double h);

struct Checkpoint {
  std::uint32_t version = 1;
  ModelConfig config;
  Vocab vocab;
  std::vector<std::string> tag_names;  // rendered 67-tag list, id order
  ModelParams params;
  int epoch = 0;
  double dev_f1 = 0.0;
};

// Checkpoint tensors are 32-bit floats; parameters are rounded through
// f32 so that save -> load is bit-exact.
void quantize_params(ModelParams& params);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int batch_size = 4;
  int epochs = 15;
  std::uint64_t seed = 0;
  AdamWHyper hyper;
  std::size_t vocab_size = 2000;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double dev_macro_f1 = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochStats> history;
};

// Seeded init, per-epoch shuffle, batches of batch_size, backward +
// adamw_step per batch; after each epoch the dev fine-grained macro-F1 is
// evaluated via predict + macro_report and the best epoch (ties earliest)
// is kept. Deterministic given the seed.
TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus,
                  const TrainConfig& train_config, ModelConfig model_config);

}  // namespace ner
