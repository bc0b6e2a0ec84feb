#include "hallufix/pipeline.h"

#include <CLI11.hpp>

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "hallufix/error.h"
#include "hallufix/eval.h"
#include "hallufix/protocol.h"
#include "hallufix/random.h"

namespace hallufix {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModule = "cli";

Error config_error(const std::string& what) {
  return Error(ErrorCode::kConfigInvalid, kModule, what);
}

void reject_unknown(const Json& j, std::initializer_list<std::string_view> keys,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    throw config_error("bad value for '" + std::string(key) + "' in " + where);
  }
}

std::size_t positive_size(const Json& j, const char* key, std::size_t fallback,
                          const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
    throw config_error("'" + std::string(key) + "' in " + where +
                       " must be a positive integer");
  }
  return v.get<std::size_t>();
}

ComponentSpec component_from_json(const Json& j, const fs::path& base,
                                  bool is_recognizer) {
  const std::string where = is_recognizer ? "recognizer" : "scorer";
  if (!j.is_object()) throw config_error(where + " must be an object");
  ComponentSpec spec;
  const auto type = get_or<std::string>(j, "type", "builtin", where);
  if (type == "builtin") {
    if (is_recognizer) {
      reject_unknown(j, {"type", "gazetteers"}, where);
      if (j.contains("gazetteers")) {
        if (!j["gazetteers"].is_array()) {
          throw config_error("recognizer.gazetteers must be a list of paths");
        }
        for (const auto& p : j["gazetteers"]) {
          if (!p.is_string()) throw config_error("gazetteer path must be a string");
          fs::path path = base / p.get<std::string>();
          if (!fs::exists(path)) {
            throw config_error("gazetteer file not found: " + path.string());
          }
          spec.gazetteers.push_back(std::move(path));
        }
      }
    } else {
      reject_unknown(j, {"type", "model"}, where);
      if (j.contains("model")) {
        spec.model = base / get_or<std::string>(j, "model", "", where);
      }
    }
  } else if (type == "external") {
    reject_unknown(j, {"type", "endpoint", "timeout_ms"}, where);
    spec.kind = ComponentSpec::Kind::kExternal;
    spec.endpoint = get_or<std::string>(j, "endpoint", "", where);
    spec.timeout_ms = get_or<int>(j, "timeout_ms", 30000, where);
    if (spec.timeout_ms <= 0) throw config_error(where + ".timeout_ms must be positive");
    protocol::Endpoint::parse(spec.endpoint);
  } else {
    throw config_error("unknown " + where + " type '" + type + "'");
  }
  return spec;
}

std::vector<Example> load_corpus(const fs::path& path, bool strict, std::ostream& err) {
  LoadResult loaded = load_examples(path, strict);
  if (loaded.diagnostics.skipped > 0) {
    err << "warning: skipped " << loaded.diagnostics.skipped
        << " malformed line(s) in " << path.string() << "\n";
  }
  return std::move(loaded.examples);
}

template <typename Result, typename Worker>
std::vector<Result> map_examples(const std::vector<Example>& examples,
                                 unsigned workers, const RecognizerFactory& factory,
                                 Worker&& work) {
  std::vector<Result> results(examples.size());
  const unsigned n = std::max(1u, std::min<unsigned>(
                                      workers, static_cast<unsigned>(
                                                   std::max<std::size_t>(1, examples.size()))));
  std::vector<std::unique_ptr<Recognizer>> recognizers;
  for (unsigned i = 0; i < n; ++i) recognizers.push_back(factory());
  parallel_for(examples.size(), n, [&](unsigned w, std::size_t i) {
    results[i] = work(*recognizers[w], examples[i]);
  });
  return results;
}

}  // namespace

LabelFilter PipelineConfig::labels() const {
  if (label_allowlist.empty()) return LabelFilter::all();
  return LabelFilter::only(label_allowlist);
}

PipelineConfig PipelineConfig::from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw config_error("config must be an object");
  reject_unknown(j,
                 {"recognizer", "scorer", "max_candidates", "negatives_per_example",
                  "label_allowlist", "seed", "min_improvement", "train"},
                 "config");
  PipelineConfig c;
  if (j.contains("recognizer")) c.recognizer = component_from_json(j["recognizer"], base_dir, true);
  if (j.contains("scorer")) c.scorer = component_from_json(j["scorer"], base_dir, false);
  c.max_candidates = positive_size(j, "max_candidates", c.max_candidates, "config");
  c.negatives_per_example =
      positive_size(j, "negatives_per_example", c.negatives_per_example, "config");
  if (j.contains("label_allowlist")) {
    if (!j["label_allowlist"].is_array()) throw config_error("label_allowlist must be a list");
    for (const auto& l : j["label_allowlist"]) {
      auto label = l.is_string() ? parse_label(l.get<std::string>()) : std::nullopt;
      if (!label) throw config_error("unknown label in label_allowlist: " + l.dump());
      c.label_allowlist.push_back(*label);
    }
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0, "config");
  c.min_improvement = get_or<double>(j, "min_improvement", 0.0, "config");
  if (c.min_improvement < 0.0) throw config_error("min_improvement must be non-negative");
  if (j.contains("train")) {
    const Json& t = j["train"];
    if (!t.is_object()) throw config_error("train must be an object");
    reject_unknown(t, {"learning_rate", "epochs", "margin", "batch_size", "epsilon"}, "train");
    c.train.learning_rate = get_or<double>(t, "learning_rate", c.train.learning_rate, "train");
    c.train.epochs = get_or<int>(t, "epochs", c.train.epochs, "train");
    c.train.margin = get_or<double>(t, "margin", c.train.margin, "train");
    c.train.batch_size = positive_size(t, "batch_size", c.train.batch_size, "train");
    c.train.epsilon = get_or<double>(t, "epsilon", c.train.epsilon, "train");
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw config_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

RecognizerFactory make_recognizer_factory(const ComponentSpec& spec) {
  if (spec.kind == ComponentSpec::Kind::kExternal) {
    auto endpoint = protocol::Endpoint::parse(
        spec.endpoint, std::chrono::milliseconds(spec.timeout_ms));
    return [endpoint] {
      return std::make_unique<protocol::ExternalRecognizer>(endpoint);
    };
  }
  std::vector<Gazetteer> all;
  for (const auto& path : spec.gazetteers) {
    auto loaded = load_gazetteers(path);
    std::move(loaded.begin(), loaded.end(), std::back_inserter(all));
  }
  auto shared = std::make_shared<const BuiltinRecognizer>(std::move(all));
  return [shared] { return std::make_unique<BuiltinRecognizer>(*shared); };
}

std::unique_ptr<Scorer> make_scorer(const ComponentSpec& spec, Recognizer& recognizer) {
  if (spec.kind == ComponentSpec::Kind::kExternal) {
    return std::make_unique<protocol::ExternalScorer>(protocol::Endpoint::parse(
        spec.endpoint, std::chrono::milliseconds(spec.timeout_ms)));
  }
  if (spec.model.empty()) {
    throw config_error("the builtin scorer needs a model path (scorer.model or --model)");
  }
  return std::make_unique<BuiltinScorer>(load_model(spec.model), recognizer);
}

Detection detect(const Example& example, Recognizer& recognizer,
                 const LabelFilter& labels) {
  Detection d;
  d.source_mentions = recognizer.recognize(example.document);
  d.summary_mentions = recognizer.recognize(example.summary);
  d.hallucinated = find_hallucinated(example.document, d.source_mentions,
                                     d.summary_mentions, labels);
  return d;
}

Json detection_to_json(const Example& example, const Detection& detection) {
  Json j;
  j["id"] = example.id;
  j["hallucinated"] = !detection.hallucinated.empty();
  Json spans = Json::array();
  for (const auto& m : detection.hallucinated) spans.push_back(to_json(m));
  j["mentions"] = std::move(spans);
  return j;
}

std::vector<CandidateSummary> candidates_for(const Example& example,
                                             Recognizer& recognizer,
                                             const LabelFilter& labels,
                                             std::size_t max_candidates) {
  const Detection d = detect(example, recognizer, labels);
  return generate_candidates(example, d.source_mentions, d.summary_mentions,
                             d.hallucinated, max_candidates);
}

SelectionOutcome correct_example(const Example& example, Recognizer& recognizer,
                                 Scorer& scorer, const PipelineConfig& config) {
  const auto candidates =
      candidates_for(example, recognizer, config.labels(), config.max_candidates);
  return select_best(scorer, example, candidates, {config.min_improvement});
}

void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(unsigned, std::size_t)>& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  const auto loop = [&](unsigned w) {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(w, i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(loop, w);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entity hallucination detection and correction for summaries", "hallufix"};
  app.require_subcommand(1);

  std::string config_path, input, output, corpus_path, model_path, mode = "changed";
  std::uint64_t seed = 0;
  unsigned parallel = 1;
  bool strict = false;
  std::size_t max_candidates = 0, resamples = kDefaultResamples;
  double threshold = 0.5, z = kDefaultZ;

  const auto common = [&](CLI::App* sub, bool parallel_ok) {
    sub->add_option("--config", config_path, "Pipeline config file")->check(CLI::ExistingFile);
    sub->add_option("--input", input, "Input records")->required();
    sub->add_option("--output", output, "Output file")->required();
    sub->add_option("--seed", seed, "Top-level seed (overrides config)");
    sub->add_flag("--strict", strict, "Fail on the first malformed input line");
    if (parallel_ok) {
      sub->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
    }
  };
  auto* detect_cmd = app.add_subcommand("detect", "Flag hallucinated summary entities");
  common(detect_cmd, true);
  auto* generate_cmd = app.add_subcommand("generate", "Write contrast candidates");
  common(generate_cmd, true);
  generate_cmd->add_option("--max-candidates", max_candidates)->check(CLI::PositiveNumber);
  auto* synth_cmd = app.add_subcommand("synth", "Build training pairs from clean references");
  common(synth_cmd, false);
  auto* train_cmd = app.add_subcommand("train", "Train the ranker on training pairs");
  common(train_cmd, false);
  auto* correct_cmd = app.add_subcommand("correct", "Select the most faithful candidate");
  common(correct_cmd, true);
  correct_cmd->add_option("--model", model_path, "Ranker model (overrides config)");
  correct_cmd->add_option("--max-candidates", max_candidates)->check(CLI::PositiveNumber);
  auto* eval_cmd = app.add_subcommand("eval", "Score outcomes against the corpus");
  common(eval_cmd, true);
  eval_cmd->add_option("--corpus", corpus_path, "Corpus the outcomes came from")->required();
  eval_cmd->add_option("--mode", mode, "Identification rule")
      ->check(CLI::IsMember({"changed", "threshold"}));
  eval_cmd->add_option("--threshold", threshold);
  eval_cmd->add_option("--resamples", resamples)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--z", z);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    PipelineConfig config;
    if (!config_path.empty()) config = PipelineConfig::load(config_path);
    bool seed_given = false;
    for (auto* sub : app.get_subcommands()) seed_given |= sub->count("--seed") > 0;
    if (seed_given) config.seed = seed;
    if (max_candidates > 0) config.max_candidates = max_candidates;
    if (!model_path.empty()) config.scorer.model = model_path;
    const LabelFilter labels = config.labels();

    if (detect_cmd->parsed() || generate_cmd->parsed()) {
      const auto examples = load_corpus(input, strict, err);
      const auto factory = make_recognizer_factory(config.recognizer);
      std::vector<Json> records;
      if (detect_cmd->parsed()) {
        records = map_examples<Json>(examples, parallel, factory,
                                     [&](Recognizer& r, const Example& ex) {
                                       return detection_to_json(ex, detect(ex, r, labels));
                                     });
      } else {
        auto per_example = map_examples<std::vector<Json>>(
            examples, parallel, factory, [&](Recognizer& r, const Example& ex) {
              std::vector<Json> rows;
              const auto cands = candidates_for(ex, r, labels, config.max_candidates);
              for (std::size_t i = 0; i < cands.size(); ++i) {
                rows.push_back(candidate_to_json(cands[i], ex.id, i));
              }
              return rows;
            });
        for (auto& rows : per_example) {
          std::move(rows.begin(), rows.end(), std::back_inserter(records));
        }
      }
      write_records(output, records);
      return 0;
    }

    if (synth_cmd->parsed()) {
      const auto examples = load_corpus(input, strict, err);
      const auto factory = make_recognizer_factory(config.recognizer);
      auto recognizer = factory();
      const auto clean = filter_clean(examples, *recognizer, labels);
      const auto pairs = make_training_pairs(clean, *recognizer, config.negatives_per_example,
                                             derive_seed(config.seed, "synth"), labels);
      std::vector<Json> records;
      for (const auto& p : pairs) records.push_back(to_json(p));
      write_records(output, records);
      err << "synth: " << clean.size() << " of " << examples.size()
          << " examples clean, " << pairs.size() << " pairs\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      std::vector<TrainingPair> pairs;
      std::size_t line = 0;
      for (const auto& record : load_records(input)) {
        ++line;
        try {
          pairs.push_back(pair_from_json(record));
        } catch (const Error& e) {
          if (strict) throw;
          err << "warning: skipping pair record " << line << ": " << e.what() << "\n";
        }
      }
      const auto factory = make_recognizer_factory(config.recognizer);
      auto recognizer = factory();
      TrainConfig tc = config.train;
      tc.seed = derive_seed(config.seed, "train");
      const TrainResult result = train(pairs, *recognizer, tc);
      save_model(result.model, output);
      std::ofstream report(output + ".report.json", std::ios::binary);
      report << to_json(result.report).dump(2) << "\n";
      if (!report) {
        throw Error(ErrorCode::kIoFailure, kModule, "cannot write training report");
      }
      err << "train: " << pairs.size() << " pairs, ranking accuracy "
          << result.report.ranking_accuracy << "\n";
      return 0;
    }

    if (correct_cmd->parsed()) {
      const auto examples = load_corpus(input, strict, err);
      const auto factory = make_recognizer_factory(config.recognizer);
      const unsigned n = std::max(1u, parallel);
      std::vector<std::unique_ptr<Recognizer>> recognizers;
      std::vector<std::unique_ptr<Scorer>> scorers;
      for (unsigned i = 0; i < n; ++i) {
        recognizers.push_back(factory());
        scorers.push_back(make_scorer(config.scorer, *recognizers.back()));
      }
      std::vector<Json> records(examples.size());
      parallel_for(examples.size(), n, [&](unsigned w, std::size_t i) {
        records[i] = to_json(correct_example(examples[i], *recognizers[w], *scorers[w], config));
      });
      write_records(output, records);
      return 0;
    }

    if (eval_cmd->parsed()) {
      std::vector<SelectionOutcome> outcomes;
      for (const auto& record : load_records(input)) {
        outcomes.push_back(outcome_from_json(record));
      }
      const auto corpus = load_corpus(corpus_path, strict, err);
      EvalOptions options;
      options.mode = mode == "threshold" ? IdentificationMode::below(threshold)
                                         : IdentificationMode::changed();
      options.resamples = resamples;
      options.z = z;
      options.seed = derive_seed(config.seed, "eval");
      const EvalReport report = evaluate(outcomes, corpus, options);
      std::ofstream file(output, std::ios::binary);
      file << to_json(report).dump(2) << "\n";
      if (!file) throw Error(ErrorCode::kIoFailure, kModule, "cannot write " + output);
      out << format_report(report);
      return 0;
    }
  } catch (const Error& e) {
    err << "error [" << e.module() << "/" << error_code_name(e.code()) << "]: "
        << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace hallufix
