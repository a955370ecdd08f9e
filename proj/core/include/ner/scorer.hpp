#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ner/corpus.hpp"

namespace ner {

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class Granularity { Fine, Coarse };

// Precision/recall are 0 when their denominator is 0; f1 is 0 when
// p + r = 0, else 2pr/(p+r).
Prf prf_from_counts(const ClassCounts& counts);

struct ScoreReport {
  Granularity granularity = Granularity::Fine;
  // Classes the macro average runs over, keyed by canonical name.
  std::vector<std::string> class_universe;
  std::map<std::string, ClassCounts> counts;
  std::map<std::string, Prf> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

struct SplitScoreReport {
  ScoreReport overall;
  ScoreReport corrupted;
  ScoreReport uncorrupted;
  std::set<std::string> membership;
};

class AlignmentError : public std::runtime_error {
 public:
  AlignmentError(std::string message, std::string sentence_id)
      : std::runtime_error(std::move(message)),
        sentence_id_(std::move(sentence_id)) {}

  const std::string& sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

// Exact-match entity counting: a predicted span is a TP iff an identical
// (start, end, label) span exists in gold. Inputs must be sorted and
// non-overlapping, as spans_from_bio produces.
std::map<FineType, ClassCounts> match_spans(std::span<const Span> gold,
                                            std::span<const Span> pred);

// Entity-level macro P/R/F1. pred must align with gold (same sentence ids
// in order, same token counts). Coarse granularity relabels spans via
// coarse_of before counting. By default the class universe is the classes
// with at least one gold or predicted span; full_universe forces all
// classes of the granularity. Prediction tags are repaired before span
// extraction.
ScoreReport macro_report(const Corpus& gold, const Corpus& pred,
                         Granularity granularity,
                         bool full_universe = false);

// Overall plus independent corrupted/uncorrupted sub-reports; class
// universes are computed per subset.
SplitScoreReport split_report(const Corpus& gold, const Corpus& pred,
                              const std::set<std::string>& corrupted_ids,
                              Granularity granularity,
                              bool full_universe = false);

// Fixed-width text table, 4 decimal places.
std::string render_report(const ScoreReport& report);
std::string render_split_report(const SplitScoreReport& report);

// Machine-readable form (one record per class plus a macro row).
std::string report_to_json(const ScoreReport& report);
std::string split_report_to_json(const SplitScoreReport& report);

}  // namespace ner
