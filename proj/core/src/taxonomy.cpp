#include "ner/taxonomy.hpp"

#include <array>
#include <stdexcept>
#include <unordered_map>

namespace ner {
namespace {

constexpr std::array<FineType, kNumFineTypes> kFineOrder = {
    FineType::Facility,
    FineType::OtherLOC,
    FineType::HumanSettlement,
    FineType::Station,
    FineType::VisualWork,
    FineType::MusicalWork,
    FineType::WrittenWork,
    FineType::ArtWork,
    FineType::Software,
    FineType::MusicalGRP,
    FineType::PublicCORP,
    FineType::PrivateCORP,
    FineType::ORG,
    FineType::AerospaceManufacturer,
    FineType::SportsGRP,
    FineType::CarManufacturer,
    FineType::Scientist,
    FineType::Artist,
    FineType::Athlete,
    FineType::OtherPER,
    FineType::Politician,
    FineType::Cleric,
    FineType::SportsManager,
    FineType::Clothing,
    FineType::Vehicle,
    FineType::Food,
    FineType::Drink,
    FineType::OtherPROD,
    FineType::MedicationVaccine,
    FineType::MedicalProcedure,
    FineType::AnatomicalStructure,
    FineType::Symptom,
    FineType::Disease,
};

constexpr std::array<std::string_view, kNumFineTypes> kFineNames = {
    "Facility",
    "OtherLOC",
    "HumanSettlement",
    "Station",
    "VisualWork",
    "MusicalWork",
    "WrittenWork",
    "ArtWork",
    "Software",
    "MusicalGRP",
    "PublicCORP",
    "PrivateCORP",
    "ORG",
    "AerospaceManufacturer",
    "SportsGRP",
    "CarManufacturer",
    "Scientist",
    "Artist",
    "Athlete",
    "OtherPER",
    "Politician",
    "Cleric",
    "SportsManager",
    "Clothing",
    "Vehicle",
    "Food",
    "Drink",
    "OtherPROD",
    "Medication/Vaccine",
    "MedicalProcedure",
    "AnatomicalStructure",
    "Symptom",
    "Disease",
};

// Group boundaries: Location 4, Creative Work 5, Group 7, Person 7,
// Product 5, Medical 5.
constexpr std::array<CoarseType, kNumFineTypes> kCoarseOf = {
    CoarseType::Location,     CoarseType::Location,     CoarseType::Location,
    CoarseType::Location,     CoarseType::CreativeWork, CoarseType::CreativeWork,
    CoarseType::CreativeWork, CoarseType::CreativeWork, CoarseType::CreativeWork,
    CoarseType::Group,        CoarseType::Group,        CoarseType::Group,
    CoarseType::Group,        CoarseType::Group,        CoarseType::Group,
    CoarseType::Group,        CoarseType::Person,       CoarseType::Person,
    CoarseType::Person,       CoarseType::Person,       CoarseType::Person,
    CoarseType::Person,       CoarseType::Person,       CoarseType::Product,
    CoarseType::Product,      CoarseType::Product,      CoarseType::Product,
    CoarseType::Product,      CoarseType::Medical,      CoarseType::Medical,
    CoarseType::Medical,      CoarseType::Medical,      CoarseType::Medical,
};

constexpr std::array<std::string_view, kNumCoarseTypes> kCoarseNames = {
    "Location", "Creative Work", "Group", "Person", "Product", "Medical",
};

const std::unordered_map<std::string_view, FineType>& fine_index() {
  static const auto* index = [] {
    auto* m = new std::unordered_map<std::string_view, FineType>();
    for (std::size_t i = 0; i < kNumFineTypes; ++i) {
      m->emplace(kFineNames[i], kFineOrder[i]);
    }
    return m;
  }();
  return *index;
}

}  // namespace

std::span<const FineType> fine_labels() { return kFineOrder; }

CoarseType coarse_of(FineType fine) {
  return kCoarseOf[static_cast<std::size_t>(fine)];
}

std::string_view to_string(FineType fine) {
  return kFineNames[static_cast<std::size_t>(fine)];
}

std::string_view to_string(CoarseType coarse) {
  return kCoarseNames[static_cast<std::size_t>(coarse)];
}

std::optional<FineType> fine_from_string(std::string_view name) {
  const auto& index = fine_index();
  auto it = index.find(name);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

int tag_id(BioTag tag) {
  if (tag.kind == BioTag::Kind::O) return 0;
  int base = 2 * static_cast<int>(tag.label);
  return tag.kind == BioTag::Kind::B ? base + 1 : base + 2;
}

BioTag tag_from_id(int id) {
  if (id < 0 || id >= static_cast<int>(kTagsetSize)) {
    throw std::out_of_range("tag id out of range: " + std::to_string(id));
  }
  if (id == 0) return BioTag::outside();
  int off = id - 1;
  FineType fine = kFineOrder[static_cast<std::size_t>(off / 2)];
  return off % 2 == 0 ? BioTag::begin(fine) : BioTag::inside(fine);
}

std::string render_tag(BioTag tag) {
  switch (tag.kind) {
    case BioTag::Kind::O:
      return "O";
    case BioTag::Kind::B:
      return "B-" + std::string(to_string(tag.label));
    case BioTag::Kind::I:
      return "I-" + std::string(to_string(tag.label));
  }
  return "O";
}

std::optional<BioTag> parse_tag(std::string_view text) {
  if (text == "O") return BioTag::outside();
  if (text.size() < 3 || text[1] != '-') return std::nullopt;
  if (text[0] != 'B' && text[0] != 'I') return std::nullopt;
  auto fine = fine_from_string(text.substr(2));
  if (!fine) return std::nullopt;
  return text[0] == 'B' ? BioTag::begin(*fine) : BioTag::inside(*fine);
}

}  // namespace ner
