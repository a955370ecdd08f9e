#include <map>
#include <set>

#include <doctest.h>

#include "ner/taxonomy.hpp"

using namespace ner;

TEST_CASE("fine label list") {
  auto labels = fine_labels();
  CHECK(labels.size() == 33);
  CHECK(labels.front() == FineType::Facility);
  std::set<FineType> distinct(labels.begin(), labels.end());
  CHECK(distinct.size() == 33);
  std::set<std::string_view> names;
  for (FineType f : labels) names.insert(to_string(f));
  CHECK(names.size() == 33);
}

TEST_CASE("coarse grouping sizes") {
  std::map<CoarseType, int> sizes;
  for (FineType f : fine_labels()) ++sizes[coarse_of(f)];
  CHECK(sizes.size() == 6);  // surjective
  CHECK(sizes[CoarseType::Location] == 4);
  CHECK(sizes[CoarseType::CreativeWork] == 5);
  CHECK(sizes[CoarseType::Group] == 7);
  CHECK(sizes[CoarseType::Person] == 7);
  CHECK(sizes[CoarseType::Product] == 5);
  CHECK(sizes[CoarseType::Medical] == 5);
}

TEST_CASE("table mappings") {
  CHECK(coarse_of(FineType::Facility) == CoarseType::Location);
  CHECK(coarse_of(FineType::Software) == CoarseType::CreativeWork);
  CHECK(coarse_of(FineType::MedicationVaccine) == CoarseType::Medical);
  CHECK(to_string(FineType::MedicationVaccine) == "Medication/Vaccine");
  CHECK(to_string(CoarseType::CreativeWork) == "Creative Work");
}

TEST_CASE("tag parsing") {
  auto tag = parse_tag("B-Artist");
  REQUIRE(tag.has_value());
  CHECK(tag->kind == BioTag::Kind::B);
  CHECK(tag->label == FineType::Artist);

  CHECK(parse_tag("O") == BioTag::outside());
  CHECK(!parse_tag("B-NotAClass").has_value());
  CHECK(!parse_tag("X-Artist").has_value());
  CHECK(!parse_tag("BArtist").has_value());
  CHECK(parse_tag("I-Medication/Vaccine") ==
        BioTag::inside(FineType::MedicationVaccine));
}

TEST_CASE("render/parse identity over the 67-tag set") {
  CHECK(kTagsetSize == 67);
  std::set<std::string> rendered;
  for (int id = 0; id < static_cast<int>(kTagsetSize); ++id) {
    BioTag tag = tag_from_id(id);
    CHECK(tag_id(tag) == id);
    std::string text = render_tag(tag);
    rendered.insert(text);
    auto parsed = parse_tag(text);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == tag);
  }
  CHECK(rendered.size() == 67);
}
