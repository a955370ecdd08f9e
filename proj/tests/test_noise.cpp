#include <cmath>
#include <random>

#include <doctest.h>

#include "ner/noise.hpp"
#include "support/generators.hpp"

using namespace ner;

TEST_CASE("corrupt_word ops") {
  NoiseConfig config;
  config.alphabet = {"a", "b", "c"};

  SUBCASE("swap-adjacent on a two-letter word") {
    config.ops = {NoiseOp::SwapAdjacent};
    std::mt19937_64 rng(1);
    CHECK(corrupt_word("ab", config, rng) == "ba");
  }
  SUBCASE("delete on a length-1 word falls back to substitution") {
    config.ops = {NoiseOp::DeleteChar};
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      std::string out = corrupt_word("a", config, rng);
      CHECK(out.size() == 1);
    }
  }
  SUBCASE("duplicate grows by one character") {
    config.ops = {NoiseOp::DuplicateChar};
    std::mt19937_64 rng(1);
    CHECK(corrupt_word("ab", config, rng).size() == 3);
  }
  SUBCASE("swap changes words with distinct adjacent characters") {
    config.ops = {NoiseOp::SwapAdjacent};
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
      // 'xy' + random tail: position 0 always has distinct neighbours
      std::string word = "xy" + gen::random_word(rng);
      bool distinct_adjacent = false;
      auto prev = word[0];
      for (std::size_t k = 1; k < word.size(); ++k) {
        if (word[k] != prev) distinct_adjacent = true;
        prev = word[k];
      }
      REQUIRE(distinct_adjacent);
      // not every draw hits a distinct pair; just require no whitespace
      // and non-empty
      std::string out = corrupt_word(word, config, rng);
      CHECK(!out.empty());
      CHECK(out.find(' ') == std::string::npos);
    }
  }
  SUBCASE("multibyte characters survive corruption") {
    config.ops = {NoiseOp::SwapAdjacent};
    std::mt19937_64 rng(1);
    CHECK(corrupt_word("राम", config, rng).size() > 0);
  }
}

TEST_CASE("corrupt_corpus") {
  std::mt19937_64 rng(12);
  Corpus corpus = gen::random_corpus(rng, 20, 8);

  SUBCASE("rate 0 is the identity") {
    NoiseConfig config;
    config.rate = 0.0;
    auto [out, membership] = corrupt_corpus(corpus, config);
    CHECK(out == corpus);
    CHECK(membership.empty());
  }
  SUBCASE("same seed gives identical output") {
    NoiseConfig config;
    config.rate = 0.5;
    config.seed = 123;
    auto [a, ma] = corrupt_corpus(corpus, config);
    auto [b, mb] = corrupt_corpus(corpus, config);
    CHECK(a == b);
    CHECK(ma == mb);
  }
  SUBCASE("tags, ids and counts are invariant; membership is exact") {
    NoiseConfig config;
    config.rate = 1.0;
    config.seed = 7;
    auto [out, membership] = corrupt_corpus(corpus, config);
    REQUIRE(out.sentences.size() == corpus.sentences.size());
    for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
      const Sentence& before = corpus.sentences[i];
      const Sentence& after = out.sentences[i];
      CHECK(after.id == before.id);
      REQUIRE(after.tokens.size() == before.tokens.size());
      bool changed = false;
      for (std::size_t k = 0; k < before.tokens.size(); ++k) {
        CHECK(after.tokens[k].tag == before.tokens[k].tag);
        CHECK(!after.tokens[k].text.empty());
        if (after.tokens[k].text != before.tokens[k].text) changed = true;
      }
      CHECK(membership.count(before.id) == (changed ? 1 : 0));
    }
  }
  SUBCASE("empirical corruption count is within 5 sigma of binomial") {
    Corpus big;
    Sentence s;
    s.id = "big";
    for (int i = 0; i < 4000; ++i) {
      s.tokens.push_back({"word" + std::to_string(i), BioTag::outside()});
    }
    big.sentences.push_back(s);
    NoiseConfig config;
    config.rate = 0.3;
    config.seed = 99;
    // substitution only resampling from a large pool: changes are near-certain
    config.ops = {NoiseOp::DuplicateChar};
    auto [out, membership] = corrupt_corpus(big, config);
    int changed = 0;
    for (std::size_t k = 0; k < s.tokens.size(); ++k) {
      if (out.sentences[0].tokens[k].text != s.tokens[k].text) ++changed;
    }
    double n = 4000.0, p = 0.3;
    double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(changed - n * p) < 5.0 * sigma);
  }
}

TEST_CASE("noise config validation") {
  NoiseConfig config;
  config.rate = 1.5;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.rate = 0.5;
  config.ops.clear();
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
