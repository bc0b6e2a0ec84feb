#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace hallufix {

// OntoNotes entity inventory.
enum class EntityLabel {
  kPerson,
  kNorp,
  kFac,
  kOrg,
  kGpe,
  kLoc,
  kProduct,
  kEvent,
  kWorkOfArt,
  kLaw,
  kLanguage,
  kDate,
  kTime,
  kPercent,
  kMoney,
  kQuantity,
  kOrdinal,
  kCardinal,
};

inline constexpr std::array<EntityLabel, 18> kAllLabels = {
    EntityLabel::kPerson,   EntityLabel::kNorp,    EntityLabel::kFac,
    EntityLabel::kOrg,      EntityLabel::kGpe,     EntityLabel::kLoc,
    EntityLabel::kProduct,  EntityLabel::kEvent,   EntityLabel::kWorkOfArt,
    EntityLabel::kLaw,      EntityLabel::kLanguage, EntityLabel::kDate,
    EntityLabel::kTime,     EntityLabel::kPercent, EntityLabel::kMoney,
    EntityLabel::kQuantity, EntityLabel::kOrdinal, EntityLabel::kCardinal,
};

std::string_view label_name(EntityLabel label);
std::optional<EntityLabel> parse_label(std::string_view name);

// DATE, TIME, PERCENT, MONEY, QUANTITY, ORDINAL, CARDINAL.
bool is_numeric_label(EntityLabel label);
inline bool is_name_label(EntityLabel label) { return !is_numeric_label(label); }

struct EntityMention {
  std::size_t start = 0;  // Unicode scalar offset into the owning text
  std::size_t end = 0;    // exclusive
  std::string surface;
  EntityLabel label = EntityLabel::kPerson;
  std::string normalized;

  std::size_t length() const { return end - start; }
  bool operator==(const EntityMention&) const = default;
};

// Canonical comparison form of a mention: case-folded, leading "the" and
// edge punctuation removed; numeric labels other than DATE/TIME also get
// their numbers canonicalized ("$9.6bn" -> "$9600000000"). Idempotent.
std::string normalize(std::string_view surface, EntityLabel label);

// Comparable value atoms of a normalized numeric mention: canonical numbers
// (with attached currency or percent marker), plus month/weekday markers for
// dates. Sorted and unique.
std::vector<std::string> canonical_values(std::string_view normalized,
                                          EntityLabel label);

// Token set of a normalized name.
std::vector<std::string> name_tokens(std::string_view normalized);

class Gazetteer {
 public:
  // Names are normalized under `label`; blank names are dropped.
  Gazetteer(EntityLabel label, std::span<const std::string> names);

  EntityLabel label() const { return label_; }
  const std::unordered_set<std::string>& entries() const { return entries_; }
  bool contains(const std::string& normalized) const {
    return entries_.count(normalized) > 0;
  }
  std::size_t max_tokens() const { return max_tokens_; }

 private:
  EntityLabel label_;
  std::unordered_set<std::string> entries_;
  std::size_t max_tokens_ = 0;
};

// Tab-separated "LABEL<TAB>name" lines, '#' comments. One Gazetteer per label
// in order of first appearance.
std::vector<Gazetteer> load_gazetteers(const std::filesystem::path& path);

// Deterministic rule + gazetteer recognizer. Numeric labels come from
// pattern rules; the remaining labels only from gazetteer lookup. Overlaps
// resolve longest-first, then MONEY > PERCENT > DATE > TIME > QUANTITY >
// ORDINAL > CARDINAL > gazetteers (in sequence order).
std::vector<EntityMention> recognize(std::string_view text,
                                     std::span<const Gazetteer> gazetteers);

class Recognizer {
 public:
  virtual ~Recognizer() = default;
  virtual std::vector<EntityMention> recognize(std::string_view text) = 0;
};

// Stateless apart from the shared, immutable gazetteer set; copies are cheap.
class BuiltinRecognizer final : public Recognizer {
 public:
  BuiltinRecognizer()
      : gazetteers_(std::make_shared<const std::vector<Gazetteer>>()) {}
  explicit BuiltinRecognizer(std::vector<Gazetteer> gazetteers)
      : gazetteers_(std::make_shared<const std::vector<Gazetteer>>(
            std::move(gazetteers))) {}

  std::vector<EntityMention> recognize(std::string_view text) override {
    return hallufix::recognize(text, *gazetteers_);
  }
  const std::vector<Gazetteer>& gazetteers() const { return *gazetteers_; }

 private:
  std::shared_ptr<const std::vector<Gazetteer>> gazetteers_;
};

// Checks the EntityMention invariants against the owning text.
bool mention_is_valid(const EntityMention& mention, std::u32string_view text);

}  // namespace hallufix
