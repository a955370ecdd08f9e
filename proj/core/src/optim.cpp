#include "ner/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ner/scorer.hpp"

namespace ner {
namespace {

double gelu_grad(double x) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

void add_colsum(Matrix& bias_grad, const Matrix& dy) {
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    for (std::size_t j = 0; j < dy.cols(); ++j) bias_grad(0, j) += dy(i, j);
  }
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

// dy -> dx for y = g*xhat + b, also accumulating dgain/dbias.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat,
                           const std::vector<double>& inv_std,
                           const Matrix& gain, Matrix& dgain, Matrix& dbias) {
  std::size_t n = dy.cols();
  Matrix dx(dy.rows(), n);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double dyv = dy(i, j);
      dgain(0, j) += dyv * xhat(i, j);
      dbias(0, j) += dyv;
      double dxh = dyv * gain(0, j);
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * xhat(i, j);
    }
    mean_dxhat /= static_cast<double>(n);
    mean_dxhat_xhat /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      double dxh = dy(i, j) * gain(0, j);
      dx(i, j) = inv_std[i] *
                 (dxh - mean_dxhat - xhat(i, j) * mean_dxhat_xhat);
    }
  }
  return dx;
}

void backward_sentence(const ModelParams& params, const ModelConfig& config,
                       const EncodedSentence& enc, const SentenceCache& cache,
                       const Matrix& dlogits, ModelParams& grads) {
  std::size_t L = static_cast<std::size_t>(config.max_len);
  std::size_t d = static_cast<std::size_t>(config.d_model);
  std::size_t heads = static_cast<std::size_t>(config.n_heads);
  std::size_t dh = d / heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Output head.
  add_into(grads.w_out, matmul_tn(cache.hidden, dlogits));
  add_colsum(grads.b_out, dlogits);
  Matrix dhidden = matmul_nt(dlogits, params.w_out);
  if (cache.drop_mask.size() > 0) {
    for (std::size_t i = 0; i < dhidden.size(); ++i) {
      dhidden.data()[i] *= cache.drop_mask.data()[i];
    }
  }

  Matrix dx = std::move(dhidden);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const LayerParams& layer = params.layers[l];
    const LayerCache& lc = cache.layers[l];
    LayerParams& lg = grads.layers[l];

    Matrix dres2 = layer_norm_backward(dx, lc.ln2_xhat, lc.ln2_inv_std,
                                       layer.ln2_g, lg.ln2_g, lg.ln2_b);

    // res2 = ln1_out + ff_out
    Matrix dln1_out = dres2;
    const Matrix& dff_out = dres2;
    add_into(lg.w2, matmul_tn(lc.ff_act, dff_out));
    add_colsum(lg.b2, dff_out);
    Matrix dff_act = matmul_nt(dff_out, layer.w2);
    Matrix dff_pre(dff_act.rows(), dff_act.cols());
    for (std::size_t i = 0; i < dff_pre.size(); ++i) {
      dff_pre.data()[i] = dff_act.data()[i] * gelu_grad(lc.ff_pre.data()[i]);
    }
    add_into(lg.w1, matmul_tn(lc.ln1_out, dff_pre));
    add_colsum(lg.b1, dff_pre);
    add_into(dln1_out, matmul_nt(dff_pre, layer.w1));

    Matrix dres1 = layer_norm_backward(dln1_out, lc.ln1_xhat, lc.ln1_inv_std,
                                       layer.ln1_g, lg.ln1_g, lg.ln1_b);

    // res1 = input + attn_out
    Matrix dinput = dres1;
    const Matrix& dattn_out = dres1;
    add_into(lg.wo, matmul_tn(lc.concat, dattn_out));
    add_colsum(lg.bo, dattn_out);
    Matrix dconcat = matmul_nt(dattn_out, layer.wo);

    Matrix dq(L, d), dk(L, d), dv(L, d);
    for (std::size_t h = 0; h < heads; ++h) {
      std::size_t off = h * dh;
      const Matrix& a = lc.attn[h];
      // dA = dHead Vh^T ; dVh = A^T dHead
      Matrix da(L, L);
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j) {
          if (a(i, j) == 0.0 && enc.mask[j] == 0) continue;
          double s = 0.0;
          for (std::size_t k = 0; k < dh; ++k) {
            s += dconcat(i, off + k) * lc.v(j, off + k);
          }
          da(i, j) = s;
        }
      }
      for (std::size_t j = 0; j < L; ++j) {
        if (!enc.mask[j]) continue;
        for (std::size_t k = 0; k < dh; ++k) {
          double s = 0.0;
          for (std::size_t i = 0; i < L; ++i) {
            s += a(i, j) * dconcat(i, off + k);
          }
          dv(j, off + k) = s;
        }
      }
      // softmax rows: ds = A o (dA - sum_k dA_ik A_ik)
      Matrix ds(L, L);
      for (std::size_t i = 0; i < L; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < L; ++j) dot += da(i, j) * a(i, j);
        for (std::size_t j = 0; j < L; ++j) {
          ds(i, j) = a(i, j) * (da(i, j) - dot);
        }
      }
      // scores = scale * Qh Kh^T
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t k = 0; k < dh; ++k) {
          double sq = 0.0;
          for (std::size_t j = 0; j < L; ++j) {
            sq += ds(i, j) * lc.k(j, off + k);
          }
          dq(i, off + k) = scale * sq;
        }
      }
      for (std::size_t j = 0; j < L; ++j) {
        for (std::size_t k = 0; k < dh; ++k) {
          double sk = 0.0;
          for (std::size_t i = 0; i < L; ++i) {
            sk += ds(i, j) * lc.q(i, off + k);
          }
          dk(j, off + k) = scale * sk;
        }
      }
    }

    add_into(lg.wq, matmul_tn(lc.input, dq));
    add_colsum(lg.bq, dq);
    add_into(lg.wk, matmul_tn(lc.input, dk));
    add_colsum(lg.bk, dk);
    add_into(lg.wv, matmul_tn(lc.input, dv));
    add_colsum(lg.bv, dv);
    add_into(dinput, matmul_nt(dq, layer.wq));
    add_into(dinput, matmul_nt(dk, layer.wk));
    add_into(dinput, matmul_nt(dv, layer.wv));

    dx = std::move(dinput);
  }

  // Embedding gather.
  for (std::size_t t = 0; t < L; ++t) {
    auto src = dx.row(t);
    auto tok = grads.tok_emb.row(static_cast<std::size_t>(enc.ids[t]));
    auto pos = grads.pos_emb.row(t);
    for (std::size_t j = 0; j < d; ++j) {
      tok[j] += src[j];
      pos[j] += src[j];
    }
  }
}

}  // namespace

void AdamWHyper::validate() const {
  if (lr <= 0.0 || epsilon <= 0.0 || weight_decay < 0.0 || beta1 < 0.0 ||
      beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("bad AdamW hyperparameters");
  }
}

OptimizerState make_optimizer_state(const ModelParams& params) {
  OptimizerState state;
  ModelParams zero = zeros_like(params);
  for (const NamedTensor& nt : named_tensors(zero)) {
    state.m.push_back(*nt.tensor);
    state.v.push_back(*nt.tensor);
  }
  return state;
}

void adamw_step_tensor(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                       long t, const AdamWHyper& hyper) {
  double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad.data()[i];
    double& mi = m.data()[i];
    double& vi = v.data()[i];
    mi = hyper.beta1 * mi + (1.0 - hyper.beta1) * g;
    vi = hyper.beta2 * vi + (1.0 - hyper.beta2) * g * g;
    double mhat = mi / bc1;
    double vhat = vi / bc2;
    double theta = param.data()[i];
    param.data()[i] =
        theta - hyper.lr * (mhat / (std::sqrt(vhat) + hyper.epsilon) +
                            hyper.weight_decay * theta);
  }
}

void adamw_step(ModelParams& params, ModelParams& grads, OptimizerState& state,
                const AdamWHyper& hyper) {
  hyper.validate();
  auto ps = named_tensors(params);
  auto gs = named_tensors(grads);
  for (const NamedTensor& nt : gs) {
    for (double g : nt.tensor->data()) {
      if (!std::isfinite(g)) {
        throw std::invalid_argument("non-finite gradient in " + nt.name);
      }
    }
  }
  ++state.t;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    adamw_step_tensor(*ps[i].tensor, *gs[i].tensor, state.m[i], state.v[i],
                      state.t, hyper);
  }
}

BackwardResult backward(const ModelParams& params, const ModelConfig& config,
                        std::span<const EncodedSentence> batch,
                        bool train_mode, std::mt19937_64* rng) {
  ForwardCache cache;
  std::vector<Matrix> logits =
      forward(params, config, batch, train_mode, rng, &cache);
  LossResult loss = softmax_cross_entropy(logits, batch);
  if (!std::isfinite(loss.loss)) {
    throw std::runtime_error("non-finite loss");
  }

  std::size_t label_count = 0;
  for (const EncodedSentence& enc : batch) {
    for (int l : enc.labels) {
      if (l >= 0) ++label_count;
    }
  }

  BackwardResult result;
  result.loss = loss.loss;
  result.grads = zeros_like(params);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Matrix dlogits(logits[b].rows(), logits[b].cols());
    for (std::size_t i = 0; i < dlogits.rows(); ++i) {
      int label = batch[b].labels[i];
      if (label < 0) continue;
      for (std::size_t j = 0; j < dlogits.cols(); ++j) {
        double p = loss.probs[b](i, j);
        double target = j == static_cast<std::size_t>(label) ? 1.0 : 0.0;
        dlogits(i, j) = (p - target) / static_cast<double>(label_count);
      }
    }
    backward_sentence(params, config, batch[b], cache.items[b], dlogits,
                      result.grads);
  }
  return result;
}

std::vector<double> finite_diff_grad(
    const std::function<double(const ModelParams&)>& loss_fn,
    ModelParams& params, const std::string& tensor_name,
    std::span<const std::size_t> coords, double h) {
  Matrix* tensor = nullptr;
  for (const NamedTensor& nt : named_tensors(params)) {
    if (nt.name == tensor_name) {
      tensor = nt.tensor;
      break;
    }
  }
  if (!tensor) {
    throw std::invalid_argument("unknown tensor: " + tensor_name);
  }
  std::vector<double> grads;
  grads.reserve(coords.size());
  for (std::size_t c : coords) {
    double original = tensor->data()[c];
    tensor->data()[c] = original + h;
    double up = loss_fn(params);
    tensor->data()[c] = original - h;
    double down = loss_fn(params);
    tensor->data()[c] = original;
    grads.push_back((up - down) / (2.0 * h));
  }
  return grads;
}

TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus,
                  const TrainConfig& train_config, ModelConfig model_config) {
  if (train_corpus.sentences.empty() || dev_corpus.sentences.empty()) {
    throw std::invalid_argument("train and dev corpora must be non-empty");
  }
  if (train_config.batch_size < 1 || train_config.epochs < 1) {
    throw std::invalid_argument("batch_size and epochs must be >= 1");
  }
  train_config.hyper.validate();

  Vocab vocab = build_vocab(train_corpus, train_config.vocab_size);
  model_config.vocab_size = static_cast<int>(vocab.size());
  model_config.validate();

  ModelParams params = init_params(model_config);
  OptimizerState state = make_optimizer_state(params);
  // Separate stream for shuffling and dropout so init stays comparable
  // across epoch counts.
  std::mt19937_64 run_rng(train_config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<EncodedSentence> encoded;
  encoded.reserve(train_corpus.sentences.size());
  for (const Sentence& s : train_corpus.sentences) {
    encoded.push_back(encode_sentence(s, vocab, model_config));
  }

  TrainResult result;
  double best_f1 = -1.0;
  ModelParams best_params = params;
  int best_epoch = 0;

  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), run_rng);
    double loss_sum = 0.0;
    std::size_t batch_count = 0;
    std::size_t bs = static_cast<std::size_t>(train_config.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<EncodedSentence> batch;
      for (std::size_t i = start; i < std::min(start + bs, order.size()); ++i) {
        batch.push_back(encoded[order[i]]);
      }
      BackwardResult back;
      try {
        back = backward(params, model_config, batch, /*train_mode=*/true,
                        &run_rng);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + " batch " +
                                 std::to_string(batch_count) + ": " +
                                 e.what());
      }
      adamw_step(params, back.grads, state, train_config.hyper);
      loss_sum += back.loss;
      ++batch_count;
    }

    // Dev evaluation with the current parameters.
    Corpus pred = dev_corpus;
    for (Sentence& sentence : pred.sentences) {
      std::vector<BioTag> tags =
          predict(params, model_config, sentence, vocab);
      for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
        sentence.tokens[i].tag = tags[i];
      }
    }
    ScoreReport report = macro_report(dev_corpus, pred, Granularity::Fine);

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = batch_count > 0 ? loss_sum / batch_count : 0.0;
    stats.dev_macro_f1 = report.macro_f1;
    result.history.push_back(stats);

    if (report.macro_f1 > best_f1) {
      best_f1 = report.macro_f1;
      best_params = params;
      best_epoch = epoch;
    }
  }

  result.best.version = 1;
  result.best.config = model_config;
  result.best.vocab = vocab;
  for (std::size_t id = 0; id < kTagsetSize; ++id) {
    result.best.tag_names.push_back(render_tag(tag_from_id(static_cast<int>(id))));
  }
  result.best.params = std::move(best_params);
  quantize_params(result.best.params);
  result.best.epoch = best_epoch;
  result.best.dev_f1 = best_f1;
  return result;
}

}  // namespace ner
