#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hallufix/contrast.h"
#include "hallufix/corpus.h"
#include "hallufix/ranker.h"

namespace hallufix {

enum class Bucket { kChanged, kKeptOriginal, kNoCandidates };

std::string_view bucket_name(Bucket bucket);
std::optional<Bucket> parse_bucket(std::string_view name);

struct ScoredCandidate {
  CandidateSummary candidate;
  double score = 0.0;
};

struct SelectionOutcome {
  std::string example_id;
  CandidateSummary chosen;
  Bucket bucket = Bucket::kNoCandidates;
  std::vector<ScoredCandidate> scored;  // in candidate order
  bool scorer_failed = false;
  std::string diagnostic;

  // Score of the original summary, if it was scored.
  std::optional<double> original_score() const;
};

struct SelectOptions {
  // A substituted candidate must beat the original by more than this.
  double min_improvement = 0.0;
};

// Scores every candidate (the original included) and keeps the best one.
// Exact ties prefer the original, then the replacement that occurs earliest
// in the source, then the lexicographically smaller text. Scorer failures
// fall back to the original and set scorer_failed.
SelectionOutcome select_best(Scorer& scorer, const Example& example,
                             std::span<const CandidateSummary> candidates,
                             const SelectOptions& options = {});

Json to_json(const SelectionOutcome& outcome);
SelectionOutcome outcome_from_json(const Json& record);

}  // namespace hallufix
