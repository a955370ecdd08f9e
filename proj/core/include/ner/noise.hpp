#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ner/corpus.hpp"

namespace ner {

enum class NoiseOp : std::uint8_t {
  SwapAdjacent,
  DeleteChar,
  SubstituteChar,
  DuplicateChar,
};

struct NoiseConfig {
  double rate = 0.0;  // per-token corruption probability
  std::vector<NoiseOp> ops = {NoiseOp::SwapAdjacent, NoiseOp::DeleteChar,
                              NoiseOp::SubstituteChar, NoiseOp::DuplicateChar};
  std::uint64_t seed = 0;
  // Substitution pool (code points). Filled from the corpus alphabet by
  // corrupt_corpus when empty.
  std::vector<std::string> alphabet;

  void validate() const;  // throws std::invalid_argument
};

// Applies exactly one uniformly chosen enabled op. Never returns an empty
// string (delete on a length-1 word falls back to substitution) and never
// introduces whitespace.
std::string corrupt_word(const std::string& word, const NoiseConfig& config,
                         std::mt19937_64& rng);

// Each token is independently corrupted with probability rate; tags,
// sentence ids and counts are untouched. A sentence joins the membership
// set iff at least one of its tokens actually changed. Deterministic
// under the seed.
std::pair<Corpus, std::set<std::string>> corrupt_corpus(
    const Corpus& corpus, const NoiseConfig& config);

}  // namespace ner
