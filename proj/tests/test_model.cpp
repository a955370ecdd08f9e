#include <cmath>
#include <random>

#include <doctest.h>

#include "ner/model.hpp"
#include "support/generators.hpp"

using namespace ner;

namespace {

Corpus tiny_corpus(const std::vector<std::string>& words) {
  Corpus c;
  Sentence s;
  s.id = "s0";
  for (const std::string& w : words) s.tokens.push_back({w, BioTag::outside()});
  c.sentences.push_back(s);
  return c;
}

ModelConfig small_config(int vocab_size, int max_len = 8) {
  ModelConfig config;
  config.d_model = 16;
  config.n_heads = 2;
  config.n_layers = 2;
  config.d_ff = 32;
  config.max_len = max_len;
  config.dropout = 0.2;
  config.vocab_size = vocab_size;
  config.seed = 3;
  return config;
}

}  // namespace

TEST_CASE("build_vocab") {
  Corpus c = tiny_corpus({"ab", "ab"});
  Vocab v = build_vocab(c, 10);
  CHECK(v.pieces[0] == "<pad>");
  CHECK(v.pieces[1] == "<unk>");
  CHECK(v.index.count("a"));
  CHECK(v.index.count("b"));
  CHECK(v.index.count("ab"));

  SUBCASE("capacity forces singles only") {
    Vocab tight = build_vocab(c, 4);  // specials + {a, b}
    CHECK(tight.size() == 4);
    CHECK(!tight.index.count("ab"));
  }
  SUBCASE("deterministic") {
    Vocab again = build_vocab(c, 10);
    CHECK(again.pieces == v.pieces);
  }
  SUBCASE("empty corpus rejected") {
    CHECK_THROWS_AS(build_vocab(Corpus{}, 100), std::invalid_argument);
  }
  SUBCASE("undersized budget rejected") {
    CHECK_THROWS_AS(build_vocab(c, 3), std::invalid_argument);
  }
}

TEST_CASE("tokenize is greedy longest match") {
  Vocab v = build_vocab(tiny_corpus({"ab", "ab", "b"}), 10);
  // "aab": greedy takes "a" then "ab"
  std::vector<int> ids = tokenize("aab", v);
  REQUIRE(ids.size() == 2);
  CHECK(v.pieces[ids[0]] == "a");
  CHECK(v.pieces[ids[1]] == "ab");

  CHECK(tokenize("x", v) == std::vector<int>{Vocab::kUnk});

  SUBCASE("pieces concatenate back to the word") {
    std::mt19937_64 rng(8);
    Corpus big;
    Sentence s;
    s.id = "s";
    for (int i = 0; i < 50; ++i) {
      s.tokens.push_back({gen::random_word(rng), BioTag::outside()});
    }
    big.sentences.push_back(s);
    Vocab vb = build_vocab(big, 60);
    for (int i = 0; i < 300; ++i) {
      std::string word = gen::random_word(rng, 10);
      std::string rebuilt;
      for (int id : tokenize(word, vb)) {
        REQUIRE(id != Vocab::kUnk);  // alphabet fully covered
        rebuilt += vb.pieces[id];
      }
      CHECK(rebuilt == word);
    }
  }
}

TEST_CASE("encode_sentence alignment and truncation") {
  Vocab v = build_vocab(tiny_corpus({"ab", "ab", "cd"}), 8);
  ModelConfig config = small_config(static_cast<int>(v.size()), 16);

  SUBCASE("first subword carries the label, the rest IGNORE") {
    Sentence s{"s", "", {{"abcd", BioTag::begin(FineType::Artist)}}};
    EncodedSentence enc = encode_sentence(s, v, config);
    // "abcd" -> "ab" + "cd": two subwords
    CHECK(enc.mask[0] == 1);
    CHECK(enc.mask[1] == 1);
    CHECK(enc.mask[2] == 0);
    CHECK(enc.labels[0] == tag_id(BioTag::begin(FineType::Artist)));
    CHECK(enc.labels[1] == kIgnoreLabel);
    CHECK(enc.word_first_subword[0] == 0);
  }
  SUBCASE("words beyond max_len are truncated") {
    Sentence s{"s", "", {}};
    for (int i = 0; i < 20; ++i) s.tokens.push_back({"a", BioTag::outside()});
    EncodedSentence enc = encode_sentence(s, v, config);
    for (int w = 0; w < 16; ++w) CHECK(enc.word_first_subword[w] == w);
    for (int w = 16; w < 20; ++w) CHECK(enc.word_first_subword[w] == kTruncated);
  }
}

TEST_CASE("forward pass properties") {
  std::mt19937_64 rng(21);
  Corpus words;
  Sentence ws;
  ws.id = "w";
  for (int i = 0; i < 30; ++i) {
    ws.tokens.push_back({gen::random_word(rng), BioTag::outside()});
  }
  words.sentences.push_back(ws);
  Vocab v = build_vocab(words, 40);
  ModelConfig config = small_config(static_cast<int>(v.size()));
  ModelParams params = init_params(config);

  Sentence s{"s", "", {{"abc", BioTag::outside()}, {"de", BioTag::outside()}}};
  EncodedSentence enc = encode_sentence(s, v, config);
  std::vector<EncodedSentence> batch{enc};

  SUBCASE("eval mode is deterministic") {
    auto a = forward(params, config, batch);
    auto b = forward(params, config, batch);
    CHECK(a[0] == b[0]);
  }

  SUBCASE("attention rows are probability vectors over unmasked keys") {
    ForwardCache cache;
    forward(params, config, batch, false, nullptr, &cache);
    for (const LayerCache& lc : cache.items[0].layers) {
      for (const Matrix& a : lc.attn) {
        for (std::size_t i = 0; i < a.rows(); ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < a.cols(); ++j) {
            CHECK(a(i, j) >= 0.0);
            if (!enc.mask[j]) CHECK(a(i, j) == 0.0);
            sum += a(i, j);
          }
          CHECK(std::abs(sum - 1.0) < 1e-9);
        }
      }
    }
  }

  SUBCASE("padded slots do not influence real positions") {
    EncodedSentence garbage = enc;
    for (std::size_t t = 0; t < garbage.ids.size(); ++t) {
      if (!garbage.mask[t]) garbage.ids[t] = 2;  // arbitrary real piece
    }
    std::vector<EncodedSentence> batch2{garbage};
    auto a = forward(params, config, batch);
    auto b = forward(params, config, batch2);
    for (std::size_t t = 0; t < enc.ids.size(); ++t) {
      if (!enc.mask[t]) continue;
      for (std::size_t j = 0; j < a[0].cols(); ++j) {
        CHECK(std::abs(a[0](t, j) - b[0](t, j)) < 1e-9);
      }
    }
  }

  SUBCASE("uniform attention when all query/key rows coincide") {
    ModelParams flat = params;
    for (double& x : flat.layers[0].wq.data()) x = 0.0;
    for (double& x : flat.layers[0].bq.data()) x = 0.0;
    ForwardCache cache;
    forward(flat, config, batch, false, nullptr, &cache);
    std::size_t real = 0;
    for (auto m : enc.mask) real += m;
    const Matrix& a = cache.items[0].layers[0].attn[0];
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (enc.mask[j]) {
        CHECK(a(0, j) == doctest::Approx(1.0 / double(real)));
      }
    }
  }

  SUBCASE("dropout at rate 0 equals eval mode bit-for-bit") {
    ModelConfig no_drop = config;
    no_drop.dropout = 0.0;
    std::mt19937_64 drop_rng(1);
    auto trained = forward(params, no_drop, batch, true, &drop_rng);
    auto evaled = forward(params, no_drop, batch);
    CHECK(trained[0] == evaled[0]);
  }

  SUBCASE("zeroed position embeddings give permutation equivariance") {
    ModelParams nopos = params;
    for (double& x : nopos.pos_emb.data()) x = 0.0;
    // two real tokens at positions 0/1 and same tokens swapped
    EncodedSentence e1 = enc;
    EncodedSentence e2 = enc;
    std::swap(e2.ids[0], e2.ids[1]);
    std::vector<EncodedSentence> b1{e1}, b2{e2};
    auto l1 = forward(nopos, config, b1);
    auto l2 = forward(nopos, config, b2);
    for (std::size_t j = 0; j < l1[0].cols(); ++j) {
      CHECK(l1[0](0, j) == doctest::Approx(l2[0](1, j)).epsilon(1e-12));
      CHECK(l1[0](1, j) == doctest::Approx(l2[0](0, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax cross entropy") {
  EncodedSentence enc;
  enc.ids = {2, 2};
  enc.mask = {1, 1};
  enc.labels = {3, kIgnoreLabel};
  std::vector<EncodedSentence> batch{enc};

  SUBCASE("uniform logits give ln C") {
    std::vector<Matrix> logits{Matrix(2, kTagsetSize, 0.5)};
    LossResult r = softmax_cross_entropy(logits, batch);
    CHECK(r.loss == doctest::Approx(std::log(67.0)).epsilon(1e-12));
    for (std::size_t i = 0; i < 2; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < kTagsetSize; ++j) sum += r.probs[0](i, j);
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
  SUBCASE("huge correct margin drives the loss to zero") {
    Matrix logits(2, kTagsetSize, 0.0);
    logits(0, 3) = 1e4;
    std::vector<Matrix> batch_logits{logits};
    LossResult r = softmax_cross_entropy(batch_logits, batch);
    CHECK(r.loss < 1e-9);
  }
  SUBCASE("all-IGNORE batch rejected") {
    EncodedSentence ignored = enc;
    ignored.labels = {kIgnoreLabel, kIgnoreLabel};
    std::vector<EncodedSentence> bad{ignored};
    std::vector<Matrix> logits{Matrix(2, kTagsetSize)};
    CHECK_THROWS_AS(softmax_cross_entropy(logits, bad), std::invalid_argument);
  }
}

TEST_CASE("predict") {
  Vocab v = build_vocab(tiny_corpus({"aa", "bb", "cc"}), 12);
  ModelConfig config = small_config(static_cast<int>(v.size()));
  ModelParams params = init_params(config);

  SUBCASE("zero head predicts O everywhere") {
    ModelParams zero_head = params;
    for (double& x : zero_head.w_out.data()) x = 0.0;
    for (double& x : zero_head.b_out.data()) x = 0.0;
    Sentence s{"s", "", {{"aa", BioTag::outside()}, {"bb", BioTag::outside()}}};
    auto tags = predict(zero_head, config, s, v);
    REQUIRE(tags.size() == 2);
    CHECK(tags[0] == BioTag::outside());
    CHECK(tags[1] == BioTag::outside());
  }
  SUBCASE("truncated words get O and output is valid BIO") {
    Sentence s{"s", "", {}};
    for (int i = 0; i < 30; ++i) s.tokens.push_back({"aa", BioTag::outside()});
    auto tags = predict(params, config, s, v);
    REQUIRE(tags.size() == 30);
    CHECK(validate_bio(tags).ok());
    // config.max_len 8, each word one subword: words 8.. are truncated
    for (std::size_t w = 8; w < 30; ++w) CHECK(tags[w] == BioTag::outside());
  }
}
