#include "ner/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "ner/utf8.hpp"

namespace ner {

Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double av = a(i, k);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += av * b(k, j);
      }
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.cols());
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows());
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double av = a(k, i);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += av * b(k, j);
      }
    }
  }
  return out;
}

void Vocab::rebuild_index() {
  index.clear();
  longest_piece = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    index.emplace(pieces[i], static_cast<int>(i));
    longest_piece = std::max(longest_piece, pieces[i].size());
  }
}

Vocab build_vocab(const Corpus& corpus, std::size_t max_size) {
  std::set<std::string> alphabet;
  std::map<std::string, std::size_t> ngram_counts;
  std::size_t token_count = 0;
  for (const Sentence& sentence : corpus.sentences) {
    for (const Token& token : sentence.tokens) {
      ++token_count;
      auto chars = utf8_chars(token.text);
      for (auto c : chars) alphabet.insert(std::string(c));
      for (std::size_t n = 2; n <= 6 && n <= chars.size(); ++n) {
        for (std::size_t i = 0; i + n <= chars.size(); ++i) {
          std::string gram;
          for (std::size_t k = 0; k < n; ++k) gram += chars[i + k];
          ++ngram_counts[gram];
        }
      }
    }
  }
  if (token_count == 0) {
    throw std::invalid_argument("build_vocab: empty corpus");
  }
  if (max_size < alphabet.size() + 2) {
    throw std::invalid_argument(
        "build_vocab: max_size too small for alphabet (" +
        std::to_string(alphabet.size() + 2) + " needed)");
  }

  Vocab vocab;
  vocab.pieces = {"<pad>", "<unk>"};
  vocab.pieces.insert(vocab.pieces.end(), alphabet.begin(), alphabet.end());

  std::vector<std::pair<std::string, std::size_t>> grams(ngram_counts.begin(),
                                                         ngram_counts.end());
  std::sort(grams.begin(), grams.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [gram, count] : grams) {
    if (vocab.pieces.size() >= max_size) break;
    vocab.pieces.push_back(gram);
  }
  vocab.rebuild_index();
  return vocab;
}

std::vector<int> tokenize(const std::string& word, const Vocab& vocab) {
  auto chars = utf8_chars(word);
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < chars.size()) {
    int best_id = -1;
    std::size_t best_len = 0;
    std::string candidate;
    std::size_t limit = std::min<std::size_t>(chars.size() - i, 6);
    for (std::size_t l = 1; l <= limit; ++l) {
      candidate += chars[i + l - 1];
      if (candidate.size() > vocab.longest_piece) break;
      auto it = vocab.index.find(candidate);
      // specials are never matched as text
      if (it != vocab.index.end() && it->second >= 2) {
        best_id = it->second;
        best_len = l;
      }
    }
    if (best_id < 0) {
      ids.push_back(Vocab::kUnk);
      i += 1;
    } else {
      ids.push_back(best_id);
      i += best_len;
    }
  }
  return ids;
}

void ModelConfig::validate() const {
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0) {
    throw std::invalid_argument("d_model must be a positive multiple of n_heads");
  }
  if (max_len < 2) throw std::invalid_argument("max_len must be >= 2");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw std::invalid_argument("dropout must be in [0, 1)");
  }
  if (n_layers < 1 || d_ff < 1 || vocab_size < 2 || tagset_size < 1) {
    throw std::invalid_argument("bad model dimensions");
  }
}

std::vector<NamedTensor> named_tensors(ModelParams& params) {
  std::vector<NamedTensor> out;
  out.push_back({"tok_emb", &params.tok_emb});
  out.push_back({"pos_emb", &params.pos_emb});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    LayerParams& layer = params.layers[l];
    std::string p = "layer" + std::to_string(l) + ".";
    out.push_back({p + "wq", &layer.wq});
    out.push_back({p + "bq", &layer.bq});
    out.push_back({p + "wk", &layer.wk});
    out.push_back({p + "bk", &layer.bk});
    out.push_back({p + "wv", &layer.wv});
    out.push_back({p + "bv", &layer.bv});
    out.push_back({p + "wo", &layer.wo});
    out.push_back({p + "bo", &layer.bo});
    out.push_back({p + "w1", &layer.w1});
    out.push_back({p + "b1", &layer.b1});
    out.push_back({p + "w2", &layer.w2});
    out.push_back({p + "b2", &layer.b2});
    out.push_back({p + "ln1_g", &layer.ln1_g});
    out.push_back({p + "ln1_b", &layer.ln1_b});
    out.push_back({p + "ln2_g", &layer.ln2_g});
    out.push_back({p + "ln2_b", &layer.ln2_b});
  }
  out.push_back({"head.w", &params.w_out});
  out.push_back({"head.b", &params.b_out});
  return out;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams out;
  out.tok_emb = Matrix(params.tok_emb.rows(), params.tok_emb.cols());
  out.pos_emb = Matrix(params.pos_emb.rows(), params.pos_emb.cols());
  out.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& src = params.layers[l];
    LayerParams& dst = out.layers[l];
    auto z = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
    dst.wq = z(src.wq); dst.bq = z(src.bq);
    dst.wk = z(src.wk); dst.bk = z(src.bk);
    dst.wv = z(src.wv); dst.bv = z(src.bv);
    dst.wo = z(src.wo); dst.bo = z(src.bo);
    dst.w1 = z(src.w1); dst.b1 = z(src.b1);
    dst.w2 = z(src.w2); dst.b2 = z(src.b2);
    dst.ln1_g = z(src.ln1_g); dst.ln1_b = z(src.ln1_b);
    dst.ln2_g = z(src.ln2_g); dst.ln2_b = z(src.ln2_b);
  }
  out.w_out = Matrix(params.w_out.rows(), params.w_out.cols());
  out.b_out = Matrix(params.b_out.rows(), params.b_out.cols());
  return out;
}

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  auto randn = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data()) v = normal(rng);
    return m;
  };
  std::size_t d = static_cast<std::size_t>(config.d_model);
  std::size_t ff = static_cast<std::size_t>(config.d_ff);

  ModelParams params;
  params.tok_emb = randn(config.vocab_size, d);
  params.pos_emb = randn(config.max_len, d);
  params.layers.resize(config.n_layers);
  for (LayerParams& layer : params.layers) {
    layer.wq = randn(d, d); layer.bq = Matrix(1, d);
    layer.wk = randn(d, d); layer.bk = Matrix(1, d);
    layer.wv = randn(d, d); layer.bv = Matrix(1, d);
    layer.wo = randn(d, d); layer.bo = Matrix(1, d);
    layer.w1 = randn(d, ff); layer.b1 = Matrix(1, ff);
    layer.w2 = randn(ff, d); layer.b2 = Matrix(1, d);
    layer.ln1_g = Matrix(1, d, 1.0); layer.ln1_b = Matrix(1, d);
    layer.ln2_g = Matrix(1, d, 1.0); layer.ln2_b = Matrix(1, d);
  }
  params.w_out = randn(d, config.tagset_size);
  params.b_out = Matrix(1, config.tagset_size);
  return params;
}

EncodedSentence encode_sentence(const Sentence& sentence, const Vocab& vocab,
                                const ModelConfig& config) {
  std::size_t max_len = static_cast<std::size_t>(config.max_len);
  EncodedSentence enc;
  enc.ids.assign(max_len, Vocab::kPad);
  enc.mask.assign(max_len, 0);
  enc.labels.assign(max_len, kIgnoreLabel);
  enc.word_first_subword.assign(sentence.tokens.size(), kTruncated);

  std::size_t pos = 0;
  for (std::size_t w = 0; w < sentence.tokens.size(); ++w) {
    if (pos >= max_len) break;
    std::vector<int> pieces = tokenize(sentence.tokens[w].text, vocab);
    if (pieces.empty()) pieces.push_back(Vocab::kUnk);
    enc.word_first_subword[w] = static_cast<int>(pos);
    enc.labels[pos] = tag_id(sentence.tokens[w].tag);
    for (int id : pieces) {
      if (pos >= max_len) break;
      enc.ids[pos] = id;
      enc.mask[pos] = 1;
      ++pos;
    }
  }
  return enc;
}

namespace {

constexpr double kLnEps = 1e-5;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

void add_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) row[j] += bias(0, j);
  }
}

// Row-wise layer norm; records normalized values and 1/std for backprop.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                  Matrix& xhat, std::vector<double>& inv_std) {
  std::size_t n = x.cols();
  Matrix out(x.rows(), n);
  xhat = Matrix(x.rows(), n);
  inv_std.assign(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double d = x(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      double xh = (x(i, j) - mean) * is;
      xhat(i, j) = xh;
      out(i, j) = gain(0, j) * xh + bias(0, j);
    }
  }
  return out;
}

void forward_sentence(const ModelParams& params, const ModelConfig& config,
                      const EncodedSentence& enc, bool train_mode,
                      std::mt19937_64* rng, SentenceCache& cache) {
  std::size_t L = static_cast<std::size_t>(config.max_len);
  std::size_t d = static_cast<std::size_t>(config.d_model);
  std::size_t heads = static_cast<std::size_t>(config.n_heads);
  std::size_t dh = d / heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.emb = Matrix(L, d);
  for (std::size_t t = 0; t < L; ++t) {
    auto tok = params.tok_emb.row(static_cast<std::size_t>(enc.ids[t]));
    auto pos = params.pos_emb.row(t);
    auto dst = cache.emb.row(t);
    for (std::size_t j = 0; j < d; ++j) dst[j] = tok[j] + pos[j];
  }

  Matrix x = cache.emb;
  cache.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& layer = params.layers[l];
    LayerCache& lc = cache.layers[l];
    lc.input = x;

    lc.q = matmul(x, layer.wq); add_bias(lc.q, layer.bq);
    lc.k = matmul(x, layer.wk); add_bias(lc.k, layer.bk);
    lc.v = matmul(x, layer.wv); add_bias(lc.v, layer.bv);

    lc.attn.assign(heads, Matrix(L, L));
    lc.concat = Matrix(L, d);
    for (std::size_t h = 0; h < heads; ++h) {
      std::size_t off = h * dh;
      Matrix& a = lc.attn[h];
      for (std::size_t i = 0; i < L; ++i) {
        double maxv = -std::numeric_limits<double>::infinity();
        std::vector<double> scores(L, -std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < L; ++j) {
          if (!enc.mask[j]) continue;  // padded keys masked out
          double s = 0.0;
          for (std::size_t k = 0; k < dh; ++k) {
            s += lc.q(i, off + k) * lc.k(j, off + k);
          }
          s *= scale;
          scores[j] = s;
          maxv = std::max(maxv, s);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          if (!enc.mask[j]) continue;
          double e = std::exp(scores[j] - maxv);
          a(i, j) = e;
          denom += e;
        }
        for (std::size_t j = 0; j < L; ++j) a(i, j) /= denom;
        for (std::size_t k = 0; k < dh; ++k) {
          double s = 0.0;
          for (std::size_t j = 0; j < L; ++j) {
            if (a(i, j) != 0.0) s += a(i, j) * lc.v(j, off + k);
          }
          lc.concat(i, off + k) = s;
        }
      }
    }

    lc.attn_out = matmul(lc.concat, layer.wo);
    add_bias(lc.attn_out, layer.bo);
    lc.res1 = Matrix(L, d);
    for (std::size_t i = 0; i < L * d; ++i) {
      lc.res1.data()[i] = x.data()[i] + lc.attn_out.data()[i];
    }
    lc.ln1_out =
        layer_norm(lc.res1, layer.ln1_g, layer.ln1_b, lc.ln1_xhat,
                   lc.ln1_inv_std);

    lc.ff_pre = matmul(lc.ln1_out, layer.w1);
    add_bias(lc.ff_pre, layer.b1);
    lc.ff_act = Matrix(lc.ff_pre.rows(), lc.ff_pre.cols());
    for (std::size_t i = 0; i < lc.ff_pre.size(); ++i) {
      lc.ff_act.data()[i] = gelu(lc.ff_pre.data()[i]);
    }
    lc.ff_out = matmul(lc.ff_act, layer.w2);
    add_bias(lc.ff_out, layer.b2);
    lc.res2 = Matrix(L, d);
    for (std::size_t i = 0; i < L * d; ++i) {
      lc.res2.data()[i] = lc.ln1_out.data()[i] + lc.ff_out.data()[i];
    }
    lc.out = layer_norm(lc.res2, layer.ln2_g, layer.ln2_b, lc.ln2_xhat,
                        lc.ln2_inv_std);
    x = lc.out;
  }

  cache.hidden = x;
  if (train_mode && config.dropout > 0.0) {
    if (!rng) {
      throw std::invalid_argument("train-mode forward with dropout needs an rng");
    }
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double keep = 1.0 - config.dropout;
    cache.drop_mask = Matrix(L, d);
    for (std::size_t i = 0; i < L * d; ++i) {
      cache.drop_mask.data()[i] = uniform(*rng) < keep ? 1.0 / keep : 0.0;
      cache.hidden.data()[i] *= cache.drop_mask.data()[i];
    }
  }

  cache.logits = matmul(cache.hidden, params.w_out);
  add_bias(cache.logits, params.b_out);
}

}  // namespace

std::vector<Matrix> forward(const ModelParams& params,
                            const ModelConfig& config,
                            std::span<const EncodedSentence> batch,
                            bool train_mode, std::mt19937_64* rng,
                            ForwardCache* cache) {
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.items.resize(batch.size());
  std::vector<Matrix> logits;
  logits.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].ids.size() != static_cast<std::size_t>(config.max_len)) {
      throw std::invalid_argument("encoded sentence length does not match config");
    }
    forward_sentence(params, config, batch[b], train_mode, rng, fc.items[b]);
    logits.push_back(fc.items[b].logits);
  }
  return logits;
}

LossResult softmax_cross_entropy(std::span<const Matrix> logits,
                                 std::span<const EncodedSentence> batch) {
  LossResult result;
  result.probs.reserve(logits.size());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const Matrix& lg = logits[b];
    Matrix probs(lg.rows(), lg.cols());
    for (std::size_t i = 0; i < lg.rows(); ++i) {
      double maxv = lg(i, 0);
      for (std::size_t j = 1; j < lg.cols(); ++j) maxv = std::max(maxv, lg(i, j));
      double denom = 0.0;
      for (std::size_t j = 0; j < lg.cols(); ++j) {
        denom += std::exp(lg(i, j) - maxv);
      }
      double log_denom = std::log(denom);
      for (std::size_t j = 0; j < lg.cols(); ++j) {
        probs(i, j) = std::exp(lg(i, j) - maxv) / denom;
      }
      int label = batch[b].labels[i];
      if (label >= 0) {
        total -= (lg(i, static_cast<std::size_t>(label)) - maxv) - log_denom;
        ++count;
      }
    }
    result.probs.push_back(std::move(probs));
  }
  if (count == 0) {
    throw std::invalid_argument("softmax_cross_entropy: all positions IGNORE");
  }
  result.loss = total / static_cast<double>(count);
  return result;
}

std::vector<BioTag> predict(const ModelParams& params,
                            const ModelConfig& config,
                            const Sentence& sentence, const Vocab& vocab) {
  EncodedSentence enc = encode_sentence(sentence, vocab, config);
  std::vector<EncodedSentence> batch{enc};
  std::vector<Matrix> logits = forward(params, config, batch);
  const Matrix& lg = logits[0];

  std::vector<BioTag> tags;
  tags.reserve(sentence.tokens.size());
  for (std::size_t w = 0; w < sentence.tokens.size(); ++w) {
    int fs = enc.word_first_subword[w];
    if (fs < 0) {
      tags.push_back(BioTag::outside());
      continue;
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < lg.cols(); ++j) {
      if (lg(static_cast<std::size_t>(fs), j) >
          lg(static_cast<std::size_t>(fs), best)) {
        best = j;
      }
    }
    tags.push_back(tag_from_id(static_cast<int>(best)));
  }
  return repair_bio(tags);
}

}  // namespace ner
