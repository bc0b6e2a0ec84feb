#include "hallufix/select.h"

#include <algorithm>
#include <stdexcept>

#include "hallufix/error.h"

namespace hallufix {

namespace {

constexpr const char* kModule = "select";

std::vector<std::size_t> replacement_offsets(const CandidateSummary& c) {
  std::vector<std::size_t> offsets;
  for (const auto& s : c.substitutions) offsets.push_back(s.replacement.start);
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

// True when a should be preferred over b at equal score.
bool tie_preferred(const CandidateSummary& a, const CandidateSummary& b) {
  if (a.is_original() != b.is_original()) return a.is_original();
  const auto oa = replacement_offsets(a);
  const auto ob = replacement_offsets(b);
  if (oa != ob) return oa < ob;
  return a.text < b.text;
}

}  // namespace

std::string_view bucket_name(Bucket bucket) {
  switch (bucket) {
    case Bucket::kChanged: return "Changed";
    case Bucket::kKeptOriginal: return "KeptOriginal";
    case Bucket::kNoCandidates: return "NoCandidates";
  }
  return "";
}

std::optional<Bucket> parse_bucket(std::string_view name) {
  for (Bucket b : {Bucket::kChanged, Bucket::kKeptOriginal, Bucket::kNoCandidates}) {
    if (bucket_name(b) == name) return b;
  }
  return std::nullopt;
}

std::optional<double> SelectionOutcome::original_score() const {
  for (const auto& s : scored) {
    if (s.candidate.is_original()) return s.score;
  }
  return std::nullopt;
}

SelectionOutcome select_best(Scorer& scorer, const Example& example,
                             std::span<const CandidateSummary> candidates,
                             const SelectOptions& options) {
  const auto originals = std::count_if(
      candidates.begin(), candidates.end(),
      [](const CandidateSummary& c) { return c.is_original(); });
  if (candidates.empty() || originals != 1) {
    throw std::invalid_argument(
        "select_best needs exactly one original candidate for '" + example.id + "'");
  }
  const auto original = std::find_if(
      candidates.begin(), candidates.end(),
      [](const CandidateSummary& c) { return c.is_original(); });

  SelectionOutcome outcome;
  outcome.example_id = example.id;
  const Bucket fallback =
      candidates.size() == 1 ? Bucket::kNoCandidates : Bucket::kKeptOriginal;

  std::vector<double> scores;
  try {
    scores = scorer.score(example.document, candidates);
    if (scores.size() != candidates.size()) {
      throw Error(ErrorCode::kCountMismatch, kModule,
                  "scorer returned " + std::to_string(scores.size()) +
                      " scores for " + std::to_string(candidates.size()) +
                      " candidates");
    }
  } catch (const std::exception& e) {
    outcome.chosen = *original;
    outcome.bucket = fallback;
    outcome.scorer_failed = true;
    outcome.diagnostic = e.what();
    return outcome;
  }

  std::size_t best = static_cast<std::size_t>(original - candidates.begin());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CandidateSummary c = candidates[i];
    c.score = scores[i];
    outcome.scored.push_back({std::move(c), scores[i]});
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && tie_preferred(candidates[i], candidates[best]))) {
      best = i;
    }
  }
  const std::size_t orig = static_cast<std::size_t>(original - candidates.begin());
  if (best != orig && !(scores[best] > scores[orig] + options.min_improvement)) {
    best = orig;
  }
  outcome.chosen = outcome.scored[best].candidate;
  if (candidates.size() == 1) {
    outcome.bucket = Bucket::kNoCandidates;
  } else {
    outcome.bucket =
        outcome.chosen.is_original() ? Bucket::kKeptOriginal : Bucket::kChanged;
  }
  return outcome;
}

Json to_json(const SelectionOutcome& outcome) {
  Json j;
  j["id"] = outcome.example_id;
  j["chosen"] = outcome.chosen.text;
  j["bucket"] = std::string(bucket_name(outcome.bucket));
  if (outcome.chosen.is_original()) {
    j["substitutions"] = Json::array();
  } else {
    j["substitutions"] =
        candidate_to_json(outcome.chosen, outcome.example_id, 0)["provenance"];
  }
  Json scored = Json::array();
  for (std::size_t i = 0; i < outcome.scored.size(); ++i) {
    Json c = candidate_to_json(outcome.scored[i].candidate, outcome.example_id, i);
    c.erase("example_id");
    scored.push_back(std::move(c));
  }
  j["scores"] = std::move(scored);
  j["scorer_failed"] = outcome.scorer_failed;
  if (!outcome.diagnostic.empty()) j["diagnostic"] = outcome.diagnostic;
  return j;
}

SelectionOutcome outcome_from_json(const Json& record) {
  SelectionOutcome o;
  try {
    o.example_id = record.at("id").get<std::string>();
    auto bucket = parse_bucket(record.at("bucket").get<std::string>());
    if (!bucket) throw std::invalid_argument("unknown bucket");
    o.bucket = *bucket;
    o.chosen.text = record.at("chosen").get<std::string>();
    for (const auto& s : record.at("scores")) {
      CandidateSummary c = candidate_from_json(s);
      const double v = c.score.value_or(0.0);
      o.scored.push_back({std::move(c), v});
    }
    for (const auto& s : o.scored) {
      if (s.candidate.text == o.chosen.text) o.chosen = s.candidate;
    }
    o.scorer_failed = record.value("scorer_failed", false);
    o.diagnostic = record.value("diagnostic", "");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, kModule,
                std::string("bad outcome record: ") + e.what());
  }
  return o;
}

}  // namespace hallufix
