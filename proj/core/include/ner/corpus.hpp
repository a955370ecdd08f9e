#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ner/taxonomy.hpp"

namespace ner {

struct Token {
  std::string text;  // non-empty, no whitespace
  BioTag tag;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::string id;
  std::string domain;  // empty when absent
  std::vector<Token> tokens;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::string split_name = "other";  // train, dev, test, other

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Half-open token range carrying one entity.
struct Span {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  FineType label = FineType::Facility;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span& a, const Span& b) {
    if (auto c = a.start <=> b.start; c != 0) return c;
    if (auto c = a.end <=> b.end; c != 0) return c;
    return static_cast<int>(a.label) <=> static_cast<int>(b.label);
  }
};

enum class ViolationKind {
  OrphanI,       // I-X after O or at sentence start
  LabelSwitchI,  // I-X after B-Y/I-Y with Y != X
  UnknownTag,
  ColumnCount,
  EmptySentence,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  std::string sentence_id;
  std::size_t token_index = 0;
  ViolationKind kind = ViolationKind::OrphanI;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t line)
      : std::runtime_error(std::move(message)), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Parses a CoNLL document: blank-line-delimited sentence blocks, each an
// optional "# id <ID>[ domain=<D>]" line followed by "<token> _ _ <tag>"
// lines. Lenient mode maps unknown tags to O and repairs orphan I; strict
// mode throws ParseError on the first violation.
Corpus parse_conll(std::string_view text, bool strict = false);

std::string serialize_conll(const Corpus& corpus);

// Scans a document and collects every violation with its sentence id and
// token index. Never throws on tag-level problems.
ValidationReport validate_conll(std::string_view text);

// Reports every I-X not continuing B-X/I-X.
ValidationReport validate_bio(std::span<const BioTag> tags);

// Rewrites each orphan or label-switch I-X to B-X. Idempotent; output
// always passes validate_bio.
std::vector<BioTag> repair_bio(std::span<const BioTag> tags);

// Maximal runs B-X (I-X)* become one Span. Requires valid BIO input;
// throws std::invalid_argument on an orphan I.
std::vector<Span> spans_from_bio(std::span<const BioTag> tags);

// Inverse of spans_from_bio. Throws std::invalid_argument on overlap or
// an out-of-range span.
std::vector<BioTag> bio_from_spans(std::span<const Span> spans,
                                   std::size_t length);

struct CorpusStats {
  std::size_t sentence_count = 0;
  std::size_t token_count = 0;
  std::map<FineType, std::size_t> span_counts;
};

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace ner
