#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hallufix/corpus.h"
#include "hallufix/select.h"

namespace hallufix {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Harmonic mean, 0 when both are 0.
PRF make_prf(double precision, double recall);

// Case-folded maximal alphanumeric runs.
std::vector<std::string> rouge_tokens(std::string_view text);

PRF rouge_n(std::string_view candidate, std::string_view reference, int n);
PRF rouge_l(std::string_view candidate, std::string_view reference);

PRF prf_from_confusion(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

struct IdentificationMode {
  enum class Kind { kChanged, kThreshold };
  Kind kind = Kind::kChanged;
  double threshold = 0.5;

  static IdentificationMode changed() { return {}; }
  static IdentificationMode below(double t) { return {Kind::kThreshold, t}; }
};

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

bool predicted_hallucinated(const SelectionOutcome& outcome,
                            const IdentificationMode& mode);

Confusion identification_confusion(std::span<const SelectionOutcome> outcomes,
                                   const std::map<std::string, bool>& gold_flags,
                                   const IdentificationMode& mode);

PRF identification_eval(std::span<const SelectionOutcome> outcomes,
                        const std::map<std::string, bool>& gold_flags,
                        const IdentificationMode& mode = {});

struct BucketFractions {
  double changed = 0.0;
  double kept = 0.0;
  double none = 0.0;
};

BucketFractions bucket_stats(std::span<const SelectionOutcome> outcomes);

struct BootstrapResult {
  double mean = 0.0;
  double stddev = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultResamples = 1000;
inline constexpr double kDefaultZ = 1.96;

// Normal-approximation interval from the distribution of resample means.
BootstrapResult bootstrap_ci(std::span<const int> labels,
                             std::size_t resamples = kDefaultResamples,
                             std::uint64_t seed = 0, double z = kDefaultZ);

struct EvalReport {
  std::size_t examples = 0;
  std::size_t with_reference = 0;
  PRF rouge1, rouge2, rougeL;  // means over examples with a reference
  std::optional<PRF> identification;
  std::optional<Confusion> confusion;
  BucketFractions buckets;
  std::optional<BootstrapResult> bootstrap;
  std::string bootstrap_target;
};

struct EvalOptions {
  IdentificationMode mode;
  std::size_t resamples = kDefaultResamples;
  double z = kDefaultZ;
  std::uint64_t seed = 0;
};

// Outcomes and the corpus they came from. ROUGE compares each chosen summary
// with the example's reference. Gold flags come from the "hallucinated"
// metadata key ("true"/"false"); identification is reported only when every
// outcome has one. The bootstrap runs over per-example prediction
// correctness when gold flags exist, else over the changed indicator.
EvalReport evaluate(std::span<const SelectionOutcome> outcomes,
                    std::span<const Example> corpus, const EvalOptions& options);

Json to_json(const PRF& prf);
Json to_json(const EvalReport& report);
std::string format_report(const EvalReport& report);

}  // namespace hallufix
