#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hallufix/contrast.h"
#include "hallufix/ner.h"

namespace hallufix {

inline constexpr const char* kFeatureSchemaVersion = "hallufix.features/1";
inline constexpr double kDefaultEpsilon = 1e-7;

struct FeatureSpec {
  std::string_view name;
  double min;
  double max;
};

// Schema order:
//   grounded_mentions   fraction of candidate mentions not flagged
//   is_original         1 for the unmodified summary
//   token_support       fraction of content tokens found in the source
//   replacement_freq    mean log(1 + source occurrences of replacements)
//   replacement_lead    mean 1 - first occurrence offset / source length
//   context_overlap     mean flank-token overlap, candidate vs source
const std::array<FeatureSpec, 6>& feature_schema();

struct FeatureVector {
  std::vector<double> values;
};

struct RankerModel {
  std::string schema_version = kFeatureSchemaVersion;
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  double margin = 0.0;
  std::string train_config_digest;

  // All-zero weights over the current feature schema.
  static RankerModel zeros(double margin = 0.0);
  bool operator==(const RankerModel&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 3;
  double margin = 0.0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;

  std::string digest() const;
};

FeatureVector featurize(std::string_view source,
                        const CandidateSummary& candidate,
                        std::span<const EntityMention> source_mentions,
                        std::span<const EntityMention> candidate_mentions);

// logistic(w . phi + b), clamped to [eps, 1 - eps].
double score(const RankerModel& model, const FeatureVector& features,
             double eps = kDefaultEpsilon);

// -ln(y+) - ln(1 - y-) + max(0, y- - y+ + margin) on clamped inputs.
double pair_loss(double positive, double negative, double margin,
                 double eps = kDefaultEpsilon);

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

// Exact gradient of pair_loss(score(pos), score(neg), margin). The hinge
// contributes nothing when its argument is <= 0, including the kink itself.
Gradient pair_gradient(const RankerModel& model, const FeatureVector& positive,
                       const FeatureVector& negative, double margin,
                       double eps = kDefaultEpsilon);

struct FeaturePair {
  FeatureVector positive;
  FeatureVector negative;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean pair loss after each epoch
  double ranking_accuracy = 0.0;   // fraction of pairs with y+ > y-
  std::size_t pairs = 0;
};

struct TrainResult {
  RankerModel model;
  TrainReport report;
};

// Both sides of a pair are presented as substitution candidates at the
// corrupted span: the negative replaces the gold entity, the positive puts
// it back into the negative. This keeps the provenance feature identical on
// both sides, as it is for competing substitutions at inference time.
FeaturePair featurize_pair(const TrainingPair& pair, Recognizer& recognizer);

TrainResult train_features(std::span<const FeaturePair> pairs,
                           const TrainConfig& config);
TrainResult train(std::span<const TrainingPair> pairs, Recognizer& recognizer,
                  const TrainConfig& config);

double ranking_accuracy(const RankerModel& model,
                        std::span<const FeaturePair> pairs);

void save_model(const RankerModel& model, const std::filesystem::path& path);
RankerModel load_model(const std::filesystem::path& path);

class Scorer {
 public:
  virtual ~Scorer() = default;
  // One score per candidate, in order.
  virtual std::vector<double> score(
      std::string_view source, std::span<const CandidateSummary> candidates) = 0;
};

class BuiltinScorer final : public Scorer {
 public:
  BuiltinScorer(RankerModel model, Recognizer& recognizer)
      : model_(std::move(model)), recognizer_(recognizer) {}

  std::vector<double> score(
      std::string_view source,
      std::span<const CandidateSummary> candidates) override;

 private:
  RankerModel model_;
  Recognizer& recognizer_;
};

Json to_json(const TrainReport& report);

}  // namespace hallufix
