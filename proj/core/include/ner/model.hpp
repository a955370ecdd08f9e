#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ner/corpus.hpp"
#include "ner/tensor.hpp"

namespace ner {

// Subword vocabulary. PAD and UNK sit at fixed indices; every single
// character seen at build time is present, so tokenization never dead-ends
// beyond UNK.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> pieces;  // pieces[0] = "<pad>", pieces[1] = "<unk>"
  std::unordered_map<std::string, int> index;
  std::size_t longest_piece = 0;  // bytes

  std::size_t size() const { return pieces.size(); }
  int lookup(const std::string& piece) const {
    auto it = index.find(piece);
    return it == index.end() ? kUnk : it->second;
  }
  void rebuild_index();
};

// Specials + all single characters + most frequent character n-grams
// (2..6 code points), frequency ties broken lexicographically.
// Deterministic. max_size must cover specials plus the alphabet.
Vocab build_vocab(const Corpus& corpus, std::size_t max_size);

// Greedy longest-match left to right; unknown characters emit UNK and
// advance one code point.
std::vector<int> tokenize(const std::string& word, const Vocab& vocab);

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 128;
  int max_len = 16;
  double dropout = 0.2;
  int tagset_size = static_cast<int>(kTagsetSize);
  int vocab_size = 0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerParams {
  Matrix wq, wk, wv, wo;  // d_model x d_model
  Matrix bq, bk, bv, bo;  // 1 x d_model
  Matrix w1, b1;          // d_model x d_ff, 1 x d_ff
  Matrix w2, b2;          // d_ff x d_model, 1 x d_model
  Matrix ln1_g, ln1_b;    // 1 x d_model
  Matrix ln2_g, ln2_b;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct ModelParams {
  Matrix tok_emb;  // vocab_size x d_model
  Matrix pos_emb;  // max_len x d_model
  std::vector<LayerParams> layers;
  Matrix w_out;  // d_model x tagset_size
  Matrix b_out;  // 1 x tagset_size

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct NamedTensor {
  std::string name;
  Matrix* tensor;
};

// Fixed traversal order shared by the optimizer, checkpointing and the
// gradient checker.
std::vector<NamedTensor> named_tensors(ModelParams& params);

ModelParams zeros_like(const ModelParams& params);

// Seeded initialization: weights and embeddings N(0, 0.02), layer-norm
// gains 1, biases 0.
ModelParams init_params(const ModelConfig& config);

inline constexpr int kIgnoreLabel = -1;
inline constexpr int kTruncated = -1;

struct EncodedSentence {
  std::vector<int> ids;            // length max_len, PAD-filled
  std::vector<std::uint8_t> mask;  // 1 = real subword
  std::vector<int> word_first_subword;  // per word; kTruncated if cut off
  std::vector<int> labels;  // per subword; kIgnoreLabel off word starts
};

EncodedSentence encode_sentence(const Sentence& sentence, const Vocab& vocab,
                                const ModelConfig& config);

// Intermediates kept for backpropagation and for white-box tests.
struct LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, L x L rows softmaxed
  Matrix concat;
  Matrix attn_out;
  Matrix res1;
  Matrix ln1_xhat;
  std::vector<double> ln1_inv_std;
  Matrix ln1_out;
  Matrix ff_pre;
  Matrix ff_act;
  Matrix ff_out;
  Matrix res2;
  Matrix ln2_xhat;
  std::vector<double> ln2_inv_std;
  Matrix out;
};

struct SentenceCache {
  Matrix emb;
  std::vector<LayerCache> layers;
  Matrix drop_mask;  // empty in eval mode
  Matrix hidden;     // final hidden states fed to the output layer
  Matrix logits;     // L x tagset_size
};

struct ForwardCache {
  std::vector<SentenceCache> items;
};

// Token+position embeddings; per layer multi-head self-attention with
// padding mask, residual + layer norm, GELU feed-forward, residual +
// layer norm; inverted dropout on the final hidden states (train mode
// only); linear output head. Eval mode is deterministic.
std::vector<Matrix> forward(const ModelParams& params,
                            const ModelConfig& config,
                            std::span<const EncodedSentence> batch,
                            bool train_mode = false,
                            std::mt19937_64* rng = nullptr,
                            ForwardCache* cache = nullptr);

struct LossResult {
  double loss = 0.0;
  std::vector<Matrix> probs;  // per item, rows softmaxed
};

// Mean cross-entropy over non-IGNORE positions, with max-subtracted
// log-softmax. Throws std::invalid_argument when every position is IGNORE.
LossResult softmax_cross_entropy(std::span<const Matrix> logits,
                                 std::span<const EncodedSentence> batch);

// Per-word argmax at the word's first subword (ties to the lowest tag id);
// truncated words get O; result is repaired to valid BIO.
std::vector<BioTag> predict(const ModelParams& params,
                            const ModelConfig& config,
                            const Sentence& sentence, const Vocab& vocab);

}  // namespace ner
