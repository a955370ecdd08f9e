#include "ner/corpus.hpp"

#include <algorithm>
#include <sstream>

namespace ner {
namespace {

struct RawToken {
  std::string text;
  std::string tag;
  int field_count = 0;
};

struct RawSentence {
  std::string id;
  std::string domain;
  std::vector<RawToken> tokens;
  std::size_t first_line = 0;  // 1-based
  bool malformed_meta = false;
};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

// Blocks are delimited by blank lines; a "# id" line opens a block.
std::vector<RawSentence> scan_blocks(std::string_view text) {
  std::vector<RawSentence> blocks;
  RawSentence current;
  bool in_block = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto flush = [&] {
    if (in_block) {
      blocks.push_back(std::move(current));
      current = RawSentence{};
      in_block = false;
    }
  };

  while (pos <= text.size()) {
    if (pos == text.size()) {
      flush();
      break;
    }
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;

    if (is_blank(line)) {
      flush();
      continue;
    }
    if (!in_block) {
      in_block = true;
      current.first_line = line_no;
    }
    if (line[0] == '#') {
      auto fields = split_fields(line);
      // "# id <ID>[ domain=<D>]"
      if (fields.size() < 3 || fields[0] != "#" || fields[1] != "id") {
        current.malformed_meta = true;
        continue;
      }
      current.id = std::string(fields[2]);
      for (std::size_t i = 3; i < fields.size(); ++i) {
        if (fields[i].starts_with("domain=")) {
          current.domain = std::string(fields[i].substr(7));
        }
      }
      continue;
    }
    auto fields = split_fields(line);
    RawToken tok;
    tok.field_count = static_cast<int>(fields.size());
    tok.text = std::string(fields[0]);
    tok.tag = fields.size() >= 2 ? std::string(fields.back()) : "O";
    current.tokens.push_back(std::move(tok));
  }
  return blocks;
}

std::string block_id(const RawSentence& raw) {
  if (!raw.id.empty()) return raw.id;
  return "line-" + std::to_string(raw.first_line);
}

}  // namespace

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::OrphanI:
      return "orphan-I";
    case ViolationKind::LabelSwitchI:
      return "label-switch-I";
    case ViolationKind::UnknownTag:
      return "unknown-tag";
    case ViolationKind::ColumnCount:
      return "column-count";
    case ViolationKind::EmptySentence:
      return "empty-sentence";
  }
  return "unknown";
}

Corpus parse_conll(std::string_view text, bool strict) {
  Corpus corpus;
  for (const RawSentence& raw : scan_blocks(text)) {
    if (raw.malformed_meta) {
      throw ParseError("malformed metadata line in block starting at line " +
                           std::to_string(raw.first_line),
                       raw.first_line);
    }
    std::string id = block_id(raw);
    if (raw.tokens.empty()) {
      if (strict) {
        throw ParseError("empty sentence " + id, raw.first_line);
      }
      continue;  // lenient: skip empty blocks
    }
    Sentence sentence;
    sentence.id = id;
    sentence.domain = raw.domain;
    std::vector<BioTag> tags;
    tags.reserve(raw.tokens.size());
    for (std::size_t i = 0; i < raw.tokens.size(); ++i) {
      const RawToken& tok = raw.tokens[i];
      if (strict && tok.field_count != 4) {
        throw ParseError("sentence " + id + " token " + std::to_string(i) +
                             ": expected 4 columns, got " +
                             std::to_string(tok.field_count),
                         raw.first_line);
      }
      auto tag = parse_tag(tok.tag);
      if (!tag) {
        if (strict) {
          throw ParseError("sentence " + id + " token " + std::to_string(i) +
                               ": unknown tag '" + tok.tag + "'",
                           raw.first_line);
        }
        tag = BioTag::outside();
      }
      tags.push_back(*tag);
    }
    if (strict) {
      ValidationReport bio = validate_bio(tags);
      if (!bio.ok()) {
        const Violation& v = bio.violations.front();
        throw ParseError("sentence " + id + " token " +
                             std::to_string(v.token_index) + ": " +
                             std::string(to_string(v.kind)),
                         raw.first_line);
      }
    } else {
      tags = repair_bio(tags);
    }
    sentence.tokens.reserve(raw.tokens.size());
    for (std::size_t i = 0; i < raw.tokens.size(); ++i) {
      sentence.tokens.push_back(Token{raw.tokens[i].text, tags[i]});
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

std::string serialize_conll(const Corpus& corpus) {
  std::string out;
  for (const Sentence& sentence : corpus.sentences) {
    out += "# id " + sentence.id;
    if (!sentence.domain.empty()) out += " domain=" + sentence.domain;
    out += '\n';
    for (const Token& token : sentence.tokens) {
      out += token.text + " _ _ " + render_tag(token.tag) + '\n';
    }
    out += '\n';
  }
  return out;
}

ValidationReport validate_conll(std::string_view text) {
  ValidationReport report;
  for (const RawSentence& raw : scan_blocks(text)) {
    std::string id = block_id(raw);
    if (raw.malformed_meta) {
      report.violations.push_back({id, 0, ViolationKind::ColumnCount});
    }
    if (raw.tokens.empty()) {
      report.violations.push_back({id, 0, ViolationKind::EmptySentence});
      continue;
    }
    std::vector<BioTag> tags;
    tags.reserve(raw.tokens.size());
    for (std::size_t i = 0; i < raw.tokens.size(); ++i) {
      const RawToken& tok = raw.tokens[i];
      if (tok.field_count != 4) {
        report.violations.push_back({id, i, ViolationKind::ColumnCount});
      }
      auto tag = parse_tag(tok.tag);
      if (!tag) {
        report.violations.push_back({id, i, ViolationKind::UnknownTag});
        tag = BioTag::outside();
      }
      tags.push_back(*tag);
    }
    for (const Violation& v : validate_bio(tags).violations) {
      report.violations.push_back({id, v.token_index, v.kind});
    }
  }
  return report;
}

ValidationReport validate_bio(std::span<const BioTag> tags) {
  ValidationReport report;
  BioTag prev = BioTag::outside();
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BioTag& tag = tags[i];
    if (tag.kind == BioTag::Kind::I) {
      if (prev.kind == BioTag::Kind::O) {
        report.violations.push_back({"", i, ViolationKind::OrphanI});
      } else if (prev.label != tag.label) {
        report.violations.push_back({"", i, ViolationKind::LabelSwitchI});
      }
    }
    prev = tag;
  }
  return report;
}

std::vector<BioTag> repair_bio(std::span<const BioTag> tags) {
  std::vector<BioTag> out;
  out.reserve(tags.size());
  BioTag prev = BioTag::outside();
  for (const BioTag& tag : tags) {
    BioTag fixed = tag;
    if (tag.kind == BioTag::Kind::I &&
        (prev.kind == BioTag::Kind::O || prev.label != tag.label)) {
      fixed = BioTag::begin(tag.label);
    }
    out.push_back(fixed);
    prev = fixed;
  }
  return out;
}

std::vector<Span> spans_from_bio(std::span<const BioTag> tags) {
  std::vector<Span> spans;
  bool open = false;
  Span current;
  auto close = [&](std::size_t end) {
    if (open) {
      current.end = end;
      spans.push_back(current);
      open = false;
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BioTag& tag = tags[i];
    switch (tag.kind) {
      case BioTag::Kind::O:
        close(i);
        break;
      case BioTag::Kind::B:
        close(i);
        current = Span{i, i, tag.label};
        open = true;
        break;
      case BioTag::Kind::I:
        if (!open || current.label != tag.label) {
          throw std::invalid_argument(
              "invalid BIO at index " + std::to_string(i) +
              ": I tag without matching B (repair first)");
        }
        break;
    }
  }
  close(tags.size());
  return spans;
}

std::vector<BioTag> bio_from_spans(std::span<const Span> spans,
                                   std::size_t length) {
  std::vector<Span> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t prev_end = 0;
  for (const Span& span : sorted) {
    if (span.start >= span.end || span.end > length) {
      throw std::invalid_argument("span out of range");
    }
    if (span.start < prev_end) {
      throw std::invalid_argument("overlapping spans");
    }
    prev_end = span.end;
  }
  std::vector<BioTag> tags(length, BioTag::outside());
  for (const Span& span : sorted) {
    tags[span.start] = BioTag::begin(span.label);
    for (std::size_t i = span.start + 1; i < span.end; ++i) {
      tags[i] = BioTag::inside(span.label);
    }
  }
  return tags;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.sentence_count = corpus.sentences.size();
  for (const Sentence& sentence : corpus.sentences) {
    stats.token_count += sentence.tokens.size();
    std::vector<BioTag> tags;
    tags.reserve(sentence.tokens.size());
    for (const Token& token : sentence.tokens) tags.push_back(token.tag);
    for (const Span& span : spans_from_bio(repair_bio(tags))) {
      ++stats.span_counts[span.label];
    }
  }
  return stats;
}

}  // namespace ner
