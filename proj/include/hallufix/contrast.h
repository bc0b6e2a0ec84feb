#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hallufix/corpus.h"
#include "hallufix/ner.h"

namespace hallufix {

// Which labels take part in detection, substitution and negative synthesis.
class LabelFilter {
 public:
  static LabelFilter all() {
    LabelFilter f;
    f.allowed_.fill(true);
    return f;
  }
  static LabelFilter only(std::span<const EntityLabel> labels) {
    LabelFilter f;
    for (EntityLabel l : labels) f.allowed_[static_cast<std::size_t>(l)] = true;
    return f;
  }
  bool allows(EntityLabel label) const {
    return allowed_[static_cast<std::size_t>(label)];
  }

 private:
  std::array<bool, kAllLabels.size()> allowed_{};
};

struct Substitution {
  EntityMention replaced;     // span of the original summary
  EntityMention replacement;  // span of the source document
  bool operator==(const Substitution&) const = default;
};

// A summary variant. No substitutions means this is the original summary.
struct CandidateSummary {
  std::string text;
  std::vector<Substitution> substitutions;  // sorted by replaced.start
  std::optional<double> score;

  bool is_original() const { return substitutions.empty(); }
};

struct CorruptedSpan {
  std::string replaced;     // gold surface
  std::string replacement;  // source surface put in its place
  EntityLabel label = EntityLabel::kPerson;
  std::size_t offset = 0;   // scalar offset of the span in the positive
  bool operator==(const CorruptedSpan&) const = default;
};

struct TrainingPair {
  std::string example_id;
  std::string source;
  std::string positive;
  std::string negative;
  CorruptedSpan corrupted_span;
  bool operator==(const TrainingPair&) const = default;
};

// Summary mentions with no matching counterpart in the source. A mention is
// grounded when (a) its surface occurs in the source, or its normalized form
// occurs in the source normalized under the same label; (b) for name labels,
// its token set and some source mention's token set nest; (c) for numeric
// labels, all its canonical values appear in one numeric source mention.
std::vector<EntityMention> find_hallucinated(
    std::string_view source, std::span<const EntityMention> source_mentions,
    std::span<const EntityMention> summary_mentions,
    const LabelFilter& labels = LabelFilter::all());

// Applies substitutions right-to-left; text outside the replaced spans is
// untouched.
std::string splice(std::string_view text, std::span<const Substitution> subs);

// [start, end) of each substituted span inside the candidate text, in the
// candidate's substitution order.
std::vector<std::pair<std::size_t, std::size_t>> substituted_spans(
    const CandidateSummary& candidate);

// Same-label source mentions, one per normalized form in order of first
// occurrence, excluding the mention's own normalized form.
std::vector<EntityMention> replacement_pool(
    const EntityMention& mention, std::span<const EntityMention> source_mentions);

inline constexpr std::size_t kDefaultMaxCandidates = 64;
inline constexpr std::size_t kUnlimitedCandidates =
    std::numeric_limits<std::size_t>::max();

// [Original, single substitutions..., full assignments...] truncated to
// max_candidates. Full assignments are emitted only when at least two
// mentions are hallucinated and every one of them has a replacement.
std::vector<CandidateSummary> generate_candidates(
    const Example& example, std::span<const EntityMention> source_mentions,
    std::span<const EntityMention> summary_mentions,
    std::span<const EntityMention> hallucinated,
    std::size_t max_candidates = kDefaultMaxCandidates);

// Examples whose reference summary has no hallucinated mention.
std::vector<Example> filter_clean(std::span<const Example> examples,
                                  Recognizer& recognizer,
                                  const LabelFilter& labels = LabelFilter::all());

// Single-span corruptions of each gold reference, at most
// negatives_per_example per example (seeded shuffle when over the cap).
std::vector<TrainingPair> make_training_pairs(
    std::span<const Example> clean, Recognizer& recognizer,
    std::size_t negatives_per_example, std::uint64_t seed,
    const LabelFilter& labels = LabelFilter::all());

Json to_json(const EntityMention& mention);
EntityMention mention_from_json(const Json& record);
Json candidate_to_json(const CandidateSummary& candidate,
                       std::string_view example_id, std::size_t index);
CandidateSummary candidate_from_json(const Json& record);
Json to_json(const TrainingPair& pair);
TrainingPair pair_from_json(const Json& record);

}  // namespace hallufix
