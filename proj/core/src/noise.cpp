#include "ner/noise.hpp"

#include <set>
#include <stdexcept>

#include "ner/utf8.hpp"

namespace ner {
namespace {

std::string join(const std::vector<std::string>& chars) {
  std::string out;
  for (const std::string& c : chars) out += c;
  return out;
}

std::vector<std::string> owned_chars(const std::string& word) {
  std::vector<std::string> out;
  for (auto view : utf8_chars(word)) out.emplace_back(view);
  return out;
}

std::string substitute(std::vector<std::string> chars,
                       const NoiseConfig& config, std::mt19937_64& rng) {
  if (config.alphabet.empty()) {
    throw std::invalid_argument("substitution needs a non-empty alphabet");
  }
  std::uniform_int_distribution<std::size_t> pick_pos(0, chars.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_char(
      0, config.alphabet.size() - 1);
  chars[pick_pos(rng)] = config.alphabet[pick_char(rng)];
  return join(chars);
}

}  // namespace

void NoiseConfig::validate() const {
  if (rate < 0.0 || rate > 1.0) {
    throw std::invalid_argument("noise rate must be in [0, 1]");
  }
  if (rate > 0.0 && ops.empty()) {
    throw std::invalid_argument("noise ops must be non-empty when rate > 0");
  }
}

std::string corrupt_word(const std::string& word, const NoiseConfig& config,
                         std::mt19937_64& rng) {
  if (word.empty()) throw std::invalid_argument("cannot corrupt empty word");
  if (config.ops.empty()) {
    throw std::invalid_argument("no noise ops enabled");
  }
  std::vector<std::string> chars = owned_chars(word);
  std::uniform_int_distribution<std::size_t> pick_op(0, config.ops.size() - 1);
  NoiseOp op = config.ops[pick_op(rng)];

  switch (op) {
    case NoiseOp::SwapAdjacent: {
      if (chars.size() < 2) return substitute(std::move(chars), config, rng);
      std::uniform_int_distribution<std::size_t> pick(0, chars.size() - 2);
      std::size_t i = pick(rng);
      std::swap(chars[i], chars[i + 1]);
      return join(chars);
    }
    case NoiseOp::DeleteChar: {
      // never shrink to the empty string
      if (chars.size() < 2) return substitute(std::move(chars), config, rng);
      std::uniform_int_distribution<std::size_t> pick(0, chars.size() - 1);
      chars.erase(chars.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
      return join(chars);
    }
    case NoiseOp::SubstituteChar:
      return substitute(std::move(chars), config, rng);
    case NoiseOp::DuplicateChar: {
      std::uniform_int_distribution<std::size_t> pick(0, chars.size() - 1);
      std::size_t i = pick(rng);
      chars.insert(chars.begin() + static_cast<std::ptrdiff_t>(i), chars[i]);
      return join(chars);
    }
  }
  return word;
}

std::pair<Corpus, std::set<std::string>> corrupt_corpus(
    const Corpus& corpus, const NoiseConfig& config) {
  config.validate();

  NoiseConfig effective = config;
  if (effective.alphabet.empty()) {
    std::set<std::string> alphabet;
    for (const Sentence& s : corpus.sentences) {
      for (const Token& t : s.tokens) {
        for (auto c : utf8_chars(t.text)) alphabet.emplace(c);
      }
    }
    effective.alphabet.assign(alphabet.begin(), alphabet.end());
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Corpus out = corpus;
  std::set<std::string> membership;
  for (Sentence& sentence : out.sentences) {
    bool changed = false;
    for (Token& token : sentence.tokens) {
      if (config.rate <= 0.0 || uniform(rng) >= config.rate) continue;
      std::string corrupted = corrupt_word(token.text, effective, rng);
      if (corrupted != token.text) {
        token.text = std::move(corrupted);
        changed = true;
      }
    }
    if (changed) membership.insert(sentence.id);
  }
  return {std::move(out), std::move(membership)};
}

}  // namespace ner
