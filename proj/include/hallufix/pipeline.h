#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hallufix/contrast.h"
#include "hallufix/corpus.h"
#include "hallufix/ner.h"
#include "hallufix/ranker.h"
#include "hallufix/select.h"

namespace hallufix {

struct ComponentSpec {
  enum class Kind { kBuiltin, kExternal };
  Kind kind = Kind::kBuiltin;
  std::vector<std::filesystem::path> gazetteers;  // builtin recognizer
  std::filesystem::path model;                    // builtin scorer
  std::string endpoint;                           // external
  int timeout_ms = 30000;
};

struct PipelineConfig {
  ComponentSpec recognizer;
  ComponentSpec scorer;
  std::size_t max_candidates = kDefaultMaxCandidates;
  std::size_t negatives_per_example = 8;
  std::vector<EntityLabel> label_allowlist;  // empty: every label
  TrainConfig train;
  std::uint64_t seed = 0;
  double min_improvement = 0.0;

  LabelFilter labels() const;

  // Relative paths resolve against base_dir. Unknown keys, bad values and
  // missing gazetteer files raise ConfigInvalid.
  static PipelineConfig from_json(const Json& j,
                                  const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
};

using RecognizerFactory = std::function<std::unique_ptr<Recognizer>()>;

// Builtin recognizers share one gazetteer set; external ones open a
// connection per instance.
RecognizerFactory make_recognizer_factory(const ComponentSpec& spec);

// Loads the model (builtin) or opens a connection (external). The scorer
// keeps a reference to the recognizer, which must outlive it.
std::unique_ptr<Scorer> make_scorer(const ComponentSpec& spec,
                                    Recognizer& recognizer);

struct Detection {
  std::vector<EntityMention> source_mentions;
  std::vector<EntityMention> summary_mentions;
  std::vector<EntityMention> hallucinated;
};

Detection detect(const Example& example, Recognizer& recognizer,
                 const LabelFilter& labels);
Json detection_to_json(const Example& example, const Detection& detection);

std::vector<CandidateSummary> candidates_for(const Example& example,
                                             Recognizer& recognizer,
                                             const LabelFilter& labels,
                                             std::size_t max_candidates);

SelectionOutcome correct_example(const Example& example, Recognizer& recognizer,
                                 Scorer& scorer, const PipelineConfig& config);

// Runs fn(worker, index) for every index in [0, n) on up to `workers`
// threads. The exception thrown for the lowest index is rethrown.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(unsigned, std::size_t)>& fn);

// The command-line front end. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace hallufix
