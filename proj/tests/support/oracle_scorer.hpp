#pragma once

// Brute-force reference scorer, written directly from the metric
// definition and kept independent of the library's span/counting path.
// Spans are found by quadratic enumeration over all (start, end) pairs
// and matched by scanning every gold/pred pair.

#include <map>
#include <string>
#include <vector>

#include "ner/corpus.hpp"
#include "ner/taxonomy.hpp"

namespace oracle {

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

struct MacroScores {
  std::map<std::string, Counts> counts;
  std::map<std::string, double> precision, recall, f1;
  double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
};

// Independent restatement of the repair rule: any I not continuing a
// same-label B/I becomes B.
inline std::vector<ner::BioTag> naive_repair(std::vector<ner::BioTag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != ner::BioTag::Kind::I) continue;
    bool continues = false;
    if (i > 0 && tags[i - 1].kind != ner::BioTag::Kind::O &&
        tags[i - 1].label == tags[i].label) {
      continues = true;
    }
    if (!continues) tags[i].kind = ner::BioTag::Kind::B;
  }
  return tags;
}

struct NaiveSpan {
  std::size_t start, end;
  std::string label;
  bool operator==(const NaiveSpan& o) const {
    return start == o.start && end == o.end && label == o.label;
  }
};

// Enumerate every (start, end) pair and test the BIO entity predicate
// directly: starts with B-X, continues with I-X, and is maximal.
inline std::vector<NaiveSpan> naive_spans(const std::vector<ner::BioTag>& tags,
                                          bool coarse) {
  std::vector<NaiveSpan> spans;
  std::size_t n = tags.size();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t e = s + 1; e <= n; ++e) {
      if (tags[s].kind != ner::BioTag::Kind::B) continue;
      ner::FineType label = tags[s].label;
      bool ok = true;
      for (std::size_t t = s + 1; t < e; ++t) {
        if (tags[t].kind != ner::BioTag::Kind::I || tags[t].label != label) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (e < n && tags[e].kind == ner::BioTag::Kind::I &&
          tags[e].label == label) {
        continue;  // not maximal
      }
      std::string name = coarse
                             ? std::string(ner::to_string(ner::coarse_of(label)))
                             : std::string(ner::to_string(label));
      spans.push_back({s, e, name});
    }
  }
  return spans;
}

inline std::vector<ner::BioTag> tags_of(const ner::Sentence& sentence) {
  std::vector<ner::BioTag> tags;
  for (const ner::Token& t : sentence.tokens) tags.push_back(t.tag);
  return tags;
}

inline MacroScores score(const ner::Corpus& gold, const ner::Corpus& pred,
                         bool coarse) {
  MacroScores out;
  for (std::size_t si = 0; si < gold.sentences.size(); ++si) {
    auto g = naive_spans(naive_repair(tags_of(gold.sentences[si])), coarse);
    auto p = naive_spans(naive_repair(tags_of(pred.sentences[si])), coarse);
    std::vector<bool> gold_used(g.size(), false);
    for (const NaiveSpan& ps : p) {
      bool hit = false;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!gold_used[i] && g[i] == ps) {
          gold_used[i] = true;
          hit = true;
          break;
        }
      }
      if (hit) {
        ++out.counts[ps.label].tp;
      } else {
        ++out.counts[ps.label].fp;
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!gold_used[i]) ++out.counts[g[i].label].fn;
    }
  }

  double sp = 0, sr = 0, sf = 0;
  for (const auto& [name, c] : out.counts) {
    double p = c.tp + c.fp > 0 ? double(c.tp) / double(c.tp + c.fp) : 0.0;
    double r = c.tp + c.fn > 0 ? double(c.tp) / double(c.tp + c.fn) : 0.0;
    double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    out.precision[name] = p;
    out.recall[name] = r;
    out.f1[name] = f;
    sp += p;
    sr += r;
    sf += f;
  }
  if (!out.counts.empty()) {
    double n = double(out.counts.size());
    out.macro_p = sp / n;
    out.macro_r = sr / n;
    out.macro_f1 = sf / n;
  }
  return out;
}

}  // namespace oracle
