#include "ner/scorer.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

namespace ner {
namespace {

std::vector<BioTag> sentence_tags(const Sentence& sentence) {
  std::vector<BioTag> tags;
  tags.reserve(sentence.tokens.size());
  for (const Token& token : sentence.tokens) tags.push_back(token.tag);
  return tags;
}

std::string span_label(const Span& span, Granularity granularity) {
  return granularity == Granularity::Fine
             ? std::string(to_string(span.label))
             : std::string(to_string(coarse_of(span.label)));
}

void check_alignment(const Corpus& gold, const Corpus& pred) {
  if (gold.sentences.size() != pred.sentences.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.sentences.size()) +
                             " sentences, pred has " +
                             std::to_string(pred.sentences.size()),
                         "");
  }
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    const Sentence& g = gold.sentences[i];
    const Sentence& p = pred.sentences[i];
    if (g.id != p.id) {
      throw AlignmentError("sentence id mismatch: gold '" + g.id +
                               "' vs pred '" + p.id + "'",
                           g.id);
    }
    if (g.tokens.size() != p.tokens.size()) {
      throw AlignmentError("token count mismatch in sentence '" + g.id + "'",
                           g.id);
    }
  }
}

// Per-class tally over one aligned sentence pair.
void tally_sentence(const Sentence& gold, const Sentence& pred,
                    Granularity granularity,
                    std::map<std::string, ClassCounts>& counts) {
  auto gold_spans = spans_from_bio(repair_bio(sentence_tags(gold)));
  auto pred_spans = spans_from_bio(repair_bio(sentence_tags(pred)));

  std::set<std::tuple<std::size_t, std::size_t, std::string>> gold_set;
  for (const Span& s : gold_spans) {
    gold_set.insert({s.start, s.end, span_label(s, granularity)});
  }
  std::set<std::tuple<std::size_t, std::size_t, std::string>> matched;
  for (const Span& s : pred_spans) {
    auto key = std::make_tuple(s.start, s.end, span_label(s, granularity));
    if (gold_set.count(key) && !matched.count(key)) {
      ++counts[std::get<2>(key)].tp;
      matched.insert(key);
    } else {
      ++counts[std::get<2>(key)].fp;
    }
  }
  for (const auto& key : gold_set) {
    if (!matched.count(key)) ++counts[std::get<2>(key)].fn;
  }
}

std::vector<std::string> canonical_classes(Granularity granularity) {
  std::vector<std::string> names;
  if (granularity == Granularity::Fine) {
    for (FineType f : fine_labels()) names.emplace_back(to_string(f));
  } else {
    for (std::size_t i = 0; i < kNumCoarseTypes; ++i) {
      names.emplace_back(to_string(static_cast<CoarseType>(i)));
    }
  }
  return names;
}

ScoreReport report_from_counts(std::map<std::string, ClassCounts> counts,
                               Granularity granularity, bool full_universe) {
  ScoreReport report;
  report.granularity = granularity;
  for (const std::string& name : canonical_classes(granularity)) {
    if (full_universe || counts.count(name)) {
      report.class_universe.push_back(name);
    }
  }
  double sp = 0.0, sr = 0.0, sf = 0.0;
  for (const std::string& name : report.class_universe) {
    ClassCounts c = counts.count(name) ? counts[name] : ClassCounts{};
    Prf prf = prf_from_counts(c);
    report.counts[name] = c;
    report.per_class[name] = prf;
    sp += prf.precision;
    sr += prf.recall;
    sf += prf.f1;
  }
  if (!report.class_universe.empty()) {
    double n = static_cast<double>(report.class_universe.size());
    report.macro_precision = sp / n;
    report.macro_recall = sr / n;
    report.macro_f1 = sf / n;
  }
  return report;
}

ScoreReport score_subset(const Corpus& gold, const Corpus& pred,
                         const std::set<std::string>* keep,
                         Granularity granularity, bool full_universe) {
  std::map<std::string, ClassCounts> counts;
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    if (keep && !keep->count(gold.sentences[i].id)) continue;
    tally_sentence(gold.sentences[i], pred.sentences[i], granularity, counts);
  }
  return report_from_counts(std::move(counts), granularity, full_universe);
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

nlohmann::json report_json(const ScoreReport& report) {
  nlohmann::json classes = nlohmann::json::array();
  for (const std::string& name : report.class_universe) {
    const ClassCounts& c = report.counts.at(name);
    const Prf& p = report.per_class.at(name);
    classes.push_back({{"class", name},
                       {"precision", p.precision},
                       {"recall", p.recall},
                       {"f1", p.f1},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn}});
  }
  return {{"granularity",
           report.granularity == Granularity::Fine ? "fine" : "coarse"},
          {"classes", classes},
          {"macro",
           {{"precision", report.macro_precision},
            {"recall", report.macro_recall},
            {"f1", report.macro_f1}}}};
}

}  // namespace

Prf prf_from_counts(const ClassCounts& counts) {
  Prf prf;
  std::size_t pred_total = counts.tp + counts.fp;
  std::size_t gold_total = counts.tp + counts.fn;
  if (pred_total > 0) {
    prf.precision = static_cast<double>(counts.tp) / pred_total;
  }
  if (gold_total > 0) {
    prf.recall = static_cast<double>(counts.tp) / gold_total;
  }
  if (prf.precision + prf.recall > 0.0) {
    prf.f1 = 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall);
  }
  return prf;
}

std::map<FineType, ClassCounts> match_spans(std::span<const Span> gold,
                                            std::span<const Span> pred) {
  auto check = [](std::span<const Span> spans, const char* which) {
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].start < spans[i - 1].end) {
        throw std::invalid_argument(std::string("overlapping ") + which +
                                    " spans");
      }
    }
  };
  check(gold, "gold");
  check(pred, "pred");

  std::map<FineType, ClassCounts> counts;
  std::set<Span> gold_set(gold.begin(), gold.end());
  std::set<Span> matched;
  for (const Span& s : pred) {
    if (gold_set.count(s) && !matched.count(s)) {
      ++counts[s.label].tp;
      matched.insert(s);
    } else {
      ++counts[s.label].fp;
    }
  }
  for (const Span& s : gold) {
    if (!matched.count(s)) ++counts[s.label].fn;
  }
  return counts;
}

ScoreReport macro_report(const Corpus& gold, const Corpus& pred,
                         Granularity granularity, bool full_universe) {
  check_alignment(gold, pred);
  return score_subset(gold, pred, nullptr, granularity, full_universe);
}

SplitScoreReport split_report(const Corpus& gold, const Corpus& pred,
                              const std::set<std::string>& corrupted_ids,
                              Granularity granularity, bool full_universe) {
  check_alignment(gold, pred);
  std::set<std::string> gold_ids;
  for (const Sentence& s : gold.sentences) gold_ids.insert(s.id);
  for (const std::string& id : corrupted_ids) {
    if (!gold_ids.count(id)) {
      throw AlignmentError("corrupted id '" + id + "' not present in gold",
                           id);
    }
  }
  std::set<std::string> uncorrupted_ids;
  for (const std::string& id : gold_ids) {
    if (!corrupted_ids.count(id)) uncorrupted_ids.insert(id);
  }

  SplitScoreReport report;
  report.membership = corrupted_ids;
  report.overall = score_subset(gold, pred, nullptr, granularity,
                                full_universe);
  report.corrupted = score_subset(gold, pred, &corrupted_ids, granularity,
                                  full_universe);
  report.uncorrupted = score_subset(gold, pred, &uncorrupted_ids, granularity,
                                    full_universe);
  return report;
}

std::string render_report(const ScoreReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %9s %9s %9s %6s %6s %6s\n",
                "class", "precision", "recall", "f1", "tp", "fp", "fn");
  out += line;
  for (const std::string& name : report.class_universe) {
    const ClassCounts& c = report.counts.at(name);
    const Prf& p = report.per_class.at(name);
    std::snprintf(line, sizeof(line), "%-24s %9s %9s %9s %6zu %6zu %6zu\n",
                  name.c_str(), fmt4(p.precision).c_str(),
                  fmt4(p.recall).c_str(), fmt4(p.f1).c_str(), c.tp, c.fp,
                  c.fn);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-24s %9s %9s %9s\n", "macro",
                fmt4(report.macro_precision).c_str(),
                fmt4(report.macro_recall).c_str(),
                fmt4(report.macro_f1).c_str());
  out += line;
  return out;
}

std::string render_split_report(const SplitScoreReport& report) {
  std::string out;
  out += "== overall ==\n" + render_report(report.overall);
  out += "== corrupted (" + std::to_string(report.membership.size()) +
         " sentences) ==\n" + render_report(report.corrupted);
  out += "== uncorrupted ==\n" + render_report(report.uncorrupted);
  return out;
}

std::string report_to_json(const ScoreReport& report) {
  return report_json(report).dump(2);
}

std::string split_report_to_json(const SplitScoreReport& report) {
  nlohmann::json j = {{"overall", report_json(report.overall)},
                      {"corrupted", report_json(report.corrupted)},
                      {"uncorrupted", report_json(report.uncorrupted)},
                      {"corrupted_ids", report.membership}};
  return j.dump(2);
}

}  // namespace ner
