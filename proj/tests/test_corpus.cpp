#include <random>

#include <doctest.h>

#include "ner/corpus.hpp"
#include "support/generators.hpp"

using namespace ner;

TEST_CASE("parse a one-sentence document") {
  Corpus c = parse_conll("# id s1 domain=hi\nराम _ _ B-OtherPER\n");
  REQUIRE(c.sentences.size() == 1);
  const Sentence& s = c.sentences[0];
  CHECK(s.id == "s1");
  CHECK(s.domain == "hi");
  REQUIRE(s.tokens.size() == 1);
  CHECK(s.tokens[0].text == "राम");
  CHECK(s.tokens[0].tag == BioTag::begin(FineType::OtherPER));
}

TEST_CASE("empty document is an empty corpus") {
  CHECK(parse_conll("").sentences.empty());
  CHECK(parse_conll("\n\n").sentences.empty());
}

TEST_CASE("lenient parsing repairs, strict rejects") {
  Corpus lenient = parse_conll("a _ _ I-Artist\n");
  REQUIRE(lenient.sentences.size() == 1);
  CHECK(lenient.sentences[0].tokens[0].tag == BioTag::begin(FineType::Artist));

  CHECK_THROWS_AS(parse_conll("a _ _ I-Artist\n", /*strict=*/true), ParseError);
  CHECK_THROWS_AS(parse_conll("a _ _ B-NotAClass\n", true), ParseError);
  CHECK_THROWS_AS(parse_conll("a _ B-Artist\n", true), ParseError);
  CHECK_THROWS_AS(parse_conll("# id s1\n\na _ _ O\n", true), ParseError);

  // lenient: unknown tags become O, short rows are tolerated
  Corpus c = parse_conll("a _ _ B-NotAClass\nb O\n");
  CHECK(c.sentences[0].tokens[0].tag == BioTag::outside());
  CHECK(c.sentences[0].tokens[1].tag == BioTag::outside());
}

TEST_CASE("missing id line synthesizes one from the line number") {
  Corpus c = parse_conll("a _ _ O\n\nb _ _ O\n");
  REQUIRE(c.sentences.size() == 2);
  CHECK(c.sentences[0].id == "line-1");
  CHECK(c.sentences[1].id == "line-3");
}

TEST_CASE("malformed metadata line") {
  CHECK_THROWS_AS(parse_conll("# bogus\na _ _ O\n"), ParseError);
}

TEST_CASE("serialization format") {
  Corpus c;
  c.sentences.push_back(
      {"s1", "en", {{"hello", BioTag::begin(FineType::Software)}}});
  CHECK(serialize_conll(c) == "# id s1 domain=en\nhello _ _ B-Software\n\n");
  CHECK(serialize_conll(Corpus{}) == "");
}

TEST_CASE("parse/serialize round trip on random corpora") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 200; ++i) {
    Corpus c = gen::random_corpus(rng, 50);
    // generated tags may be invalid BIO; canonicalize through repair
    for (Sentence& s : c.sentences) {
      std::vector<BioTag> tags;
      for (const Token& t : s.tokens) tags.push_back(t.tag);
      tags = repair_bio(tags);
      for (std::size_t k = 0; k < tags.size(); ++k) s.tokens[k].tag = tags[k];
    }
    Corpus back = parse_conll(serialize_conll(c), /*strict=*/true);
    back.split_name = c.split_name;
    CHECK(back == c);
  }
}

TEST_CASE("validate_bio") {
  auto B = [](FineType f) { return BioTag::begin(f); };
  auto I = [](FineType f) { return BioTag::inside(f); };
  auto O = BioTag::outside();

  std::vector<BioTag> valid = {B(FineType::Artist), I(FineType::Artist), O};
  CHECK(validate_bio(valid).ok());

  std::vector<BioTag> orphan = {O, I(FineType::Artist)};
  auto r1 = validate_bio(orphan);
  REQUIRE(r1.violations.size() == 1);
  CHECK(r1.violations[0].token_index == 1);
  CHECK(r1.violations[0].kind == ViolationKind::OrphanI);

  std::vector<BioTag> sw = {B(FineType::Artist), I(FineType::Facility)};
  auto r2 = validate_bio(sw);
  REQUIRE(r2.violations.size() == 1);
  CHECK(r2.violations[0].kind == ViolationKind::LabelSwitchI);
}

TEST_CASE("repair_bio") {
  auto B = [](FineType f) { return BioTag::begin(f); };
  auto I = [](FineType f) { return BioTag::inside(f); };
  auto O = BioTag::outside();

  std::vector<BioTag> orphan = {O, I(FineType::Artist)};
  CHECK(repair_bio(orphan) ==
        std::vector<BioTag>{O, B(FineType::Artist)});

  std::vector<BioTag> valid = {B(FineType::Artist), I(FineType::Artist)};
  CHECK(repair_bio(valid) == valid);

  std::vector<BioTag> sw = {B(FineType::Artist), I(FineType::Facility),
                            I(FineType::Facility)};
  CHECK(repair_bio(sw) ==
        std::vector<BioTag>{B(FineType::Artist), B(FineType::Facility),
                            I(FineType::Facility)});
}

TEST_CASE("repair_bio is idempotent and always validates") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    std::vector<BioTag> tags;
    std::uniform_int_distribution<int> len(0, 12);
    int n = len(rng);
    for (int k = 0; k < n; ++k) tags.push_back(gen::random_tag(rng));
    auto once = repair_bio(tags);
    CHECK(validate_bio(once).ok());
    CHECK(repair_bio(once) == once);

    // tokens covered by spans == non-O tags after repair
    std::size_t covered = 0;
    for (const Span& s : spans_from_bio(once)) covered += s.end - s.start;
    std::size_t non_o = 0;
    for (const BioTag& t : once) {
      if (!t.is_outside()) ++non_o;
    }
    CHECK(covered == non_o);
  }
}

TEST_CASE("spans_from_bio") {
  auto B = [](FineType f) { return BioTag::begin(f); };
  auto I = [](FineType f) { return BioTag::inside(f); };
  auto O = BioTag::outside();

  std::vector<BioTag> one = {B(FineType::Artist), I(FineType::Artist), O};
  CHECK(spans_from_bio(one) ==
        std::vector<Span>{{0, 2, FineType::Artist}});

  CHECK(spans_from_bio(std::vector<BioTag>{O, O}).empty());

  std::vector<BioTag> adjacent = {B(FineType::Artist), B(FineType::Artist)};
  CHECK(spans_from_bio(adjacent) ==
        std::vector<Span>{{0, 1, FineType::Artist},
                          {1, 2, FineType::Artist}});

  std::vector<BioTag> orphan = {O, I(FineType::Artist)};
  CHECK_THROWS_AS(spans_from_bio(orphan), std::invalid_argument);
}

TEST_CASE("bio_from_spans") {
  auto B = [](FineType f) { return BioTag::begin(f); };
  auto I = [](FineType f) { return BioTag::inside(f); };
  auto O = BioTag::outside();

  std::vector<Span> one = {{0, 2, FineType::Artist}};
  CHECK(bio_from_spans(one, 3) ==
        std::vector<BioTag>{B(FineType::Artist), I(FineType::Artist), O});
  CHECK(bio_from_spans({}, 2) == std::vector<BioTag>{O, O});

  std::vector<Span> overlap = {{0, 2, FineType::Artist},
                               {1, 3, FineType::Artist}};
  CHECK_THROWS_AS(bio_from_spans(overlap, 4), std::invalid_argument);
  std::vector<Span> oob = {{0, 5, FineType::Artist}};
  CHECK_THROWS_AS(bio_from_spans(oob, 3), std::invalid_argument);
}

TEST_CASE("span round trip property") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    std::uniform_int_distribution<std::size_t> len(0, 14);
    std::size_t n = len(rng);
    auto spans = gen::random_spans(rng, n);
    CHECK(spans_from_bio(bio_from_spans(spans, n)) == spans);
  }
}

TEST_CASE("validate_conll reports all five kinds") {
  std::string doc =
      "# id good\n"
      "a _ _ B-Artist\n"
      "\n"
      "# id orphan\n"
      "a _ _ O\n"
      "b _ _ I-Artist\n"
      "\n"
      "# id switch\n"
      "a _ _ B-Artist\n"
      "b _ _ I-Facility\n"
      "\n"
      "# id unknown\n"
      "a _ _ B-Nope\n"
      "\n"
      "# id columns\n"
      "a _ B-Artist\n"
      "\n"
      "# id empty\n"
      "\n";
  auto report = validate_conll(doc);
  auto has = [&](const std::string& id, std::size_t index, ViolationKind k) {
    for (const Violation& v : report.violations) {
      if (v.sentence_id == id && v.token_index == index && v.kind == k) {
        return true;
      }
    }
    return false;
  };
  CHECK(report.violations.size() == 5);
  CHECK(has("orphan", 1, ViolationKind::OrphanI));
  CHECK(has("switch", 1, ViolationKind::LabelSwitchI));
  CHECK(has("unknown", 0, ViolationKind::UnknownTag));
  CHECK(has("columns", 0, ViolationKind::ColumnCount));
  CHECK(has("empty", 0, ViolationKind::EmptySentence));
}

TEST_CASE("corpus_stats") {
  CHECK(corpus_stats(Corpus{}).sentence_count == 0);
  CHECK(corpus_stats(Corpus{}).token_count == 0);

  // 10 sentences, 7 Artist spans total
  Corpus c;
  for (int i = 0; i < 10; ++i) {
    Sentence s;
    s.id = "s" + std::to_string(i);
    s.tokens.push_back({"w", i < 7 ? BioTag::begin(FineType::Artist)
                                   : BioTag::outside()});
    s.tokens.push_back({"x", BioTag::outside()});
    c.sentences.push_back(s);
  }
  CorpusStats stats = corpus_stats(c);
  CHECK(stats.sentence_count == 10);
  CHECK(stats.token_count == 20);
  CHECK(stats.span_counts[FineType::Artist] == 7);
}
