#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace ner {

// The 33 fine-grained entity classes, in taxonomy table order.
enum class FineType : std::uint8_t {
  Facility,
  OtherLOC,
  HumanSettlement,
  Station,
  VisualWork,
  MusicalWork,
  WrittenWork,
  ArtWork,
  Software,
  MusicalGRP,
  PublicCORP,
  PrivateCORP,
  ORG,
  AerospaceManufacturer,
  SportsGRP,
  CarManufacturer,
  Scientist,
  Artist,
  Athlete,
  OtherPER,
  Politician,
  Cleric,
  SportsManager,
  Clothing,
  Vehicle,
  Food,
  Drink,
  OtherPROD,
  MedicationVaccine,
  MedicalProcedure,
  AnatomicalStructure,
  Symptom,
  Disease,
};

inline constexpr std::size_t kNumFineTypes = 33;

enum class CoarseType : std::uint8_t {
  Location,
  CreativeWork,
  Group,
  Person,
  Product,
  Medical,
};

inline constexpr std::size_t kNumCoarseTypes = 6;

// All fine classes in their canonical order.
std::span<const FineType> fine_labels();

// Total mapping from fine class to its coarse group.
CoarseType coarse_of(FineType fine);

// Canonical names. "Medication/Vaccine" keeps its slash.
std::string_view to_string(FineType fine);
std::string_view to_string(CoarseType coarse);

std::optional<FineType> fine_from_string(std::string_view name);

// A per-token BIO tag: O, or B-/I- with a fine class.
struct BioTag {
  enum class Kind : std::uint8_t { O, B, I };

  Kind kind = Kind::O;
  FineType label = FineType::Facility;  // ignored when kind == O

  static BioTag outside() { return {}; }
  static BioTag begin(FineType f) { return {Kind::B, f}; }
  static BioTag inside(FineType f) { return {Kind::I, f}; }

  bool is_outside() const { return kind == Kind::O; }

  friend bool operator==(const BioTag& a, const BioTag& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == Kind::O) return true;
    return a.label == b.label;
  }
};

// O plus B-/I- over 33 classes.
inline constexpr std::size_t kTagsetSize = 2 * kNumFineTypes + 1;

// Dense id in [0, 67): O -> 0, B-i -> 1+2i, I-i -> 2+2i.
int tag_id(BioTag tag);
BioTag tag_from_id(int id);

std::string render_tag(BioTag tag);

// "O", "B-<Fine>" or "I-<Fine>"; nullopt on an unknown label or
// malformed prefix (lenient callers map that to O).
std::optional<BioTag> parse_tag(std::string_view text);

}  // namespace ner
