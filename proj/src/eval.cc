#include "hallufix/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "hallufix/error.h"
#include "hallufix/random.h"
#include "hallufix/text.h"

namespace hallufix {

namespace {

constexpr const char* kModule = "eval";

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::unordered_map<std::string, std::uint64_t> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  std::unordered_map<std::string, std::uint64_t> counts;
  const auto size = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + size <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < size; ++k) {
      if (k) key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

std::uint64_t gram_total(std::size_t tokens, int n) {
  const auto size = static_cast<std::size_t>(n);
  return tokens >= size ? tokens - size + 1 : 0;
}

std::optional<bool> gold_flag(const Example& ex) {
  auto it = ex.metadata.find("hallucinated");
  if (it == ex.metadata.end()) return std::nullopt;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw Error(ErrorCode::kMalformedRecord, kModule,
              "example '" + ex.id + "': bad hallucinated flag '" + it->second + "'");
}

}  // namespace

PRF make_prf(double precision, double recall) {
  PRF p{precision, recall, 0.0};
  if (precision + recall > 0.0) p.f1 = 2.0 * precision * recall / (precision + recall);
  return p;
}

std::vector<std::string> rouge_tokens(std::string_view input) {
  using namespace text;
  std::vector<std::string> out;
  std::u32string current;
  for (char32_t c : to_u32(input)) {
    if (is_alpha(c) || is_digit(c)) {
      current.push_back(c);
    } else if (!current.empty()) {
      out.push_back(to_utf8(fold_case(current)));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(to_utf8(fold_case(current)));
  return out;
}

PRF rouge_n(std::string_view candidate, std::string_view reference, int n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be positive");
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  const auto cand_counts = ngram_counts(cand, n);
  const auto ref_counts = ngram_counts(ref, n);
  std::uint64_t matches = 0;
  for (const auto& [gram, count] : cand_counts) {
    if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
      matches += std::min(count, it->second);
    }
  }
  return make_prf(ratio(matches, gram_total(cand.size(), n)),
                  ratio(matches, gram_total(ref.size(), n)));
}

PRF rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  std::vector<std::uint64_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (std::size_t i = 1; i <= cand.size(); ++i) {
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1
                                         : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const std::uint64_t lcs = prev[ref.size()];
  return make_prf(ratio(lcs, cand.size()), ratio(lcs, ref.size()));
}

PRF prf_from_confusion(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  if (tp + fp + fn == 0) {
    throw Error(ErrorCode::kAllZeroCounts, kModule, "tp, fp and fn are all zero");
  }
  return make_prf(ratio(tp, tp + fp), ratio(tp, tp + fn));
}

bool predicted_hallucinated(const SelectionOutcome& outcome,
                            const IdentificationMode& mode) {
  if (mode.kind == IdentificationMode::Kind::kChanged) {
    return outcome.bucket == Bucket::kChanged;
  }
  const auto s = outcome.original_score();
  return s && *s < mode.threshold;
}

Confusion identification_confusion(std::span<const SelectionOutcome> outcomes,
                                   const std::map<std::string, bool>& gold_flags,
                                   const IdentificationMode& mode) {
  Confusion c;
  for (const auto& o : outcomes) {
    auto it = gold_flags.find(o.example_id);
    if (it == gold_flags.end()) {
      throw Error(ErrorCode::kMissingGoldFlag, kModule,
                  "no gold flag for '" + o.example_id + "'");
    }
    const bool pred = predicted_hallucinated(o, mode);
    if (pred && it->second) ++c.tp;
    else if (pred) ++c.fp;
    else if (it->second) ++c.fn;
    else ++c.tn;
  }
  return c;
}

PRF identification_eval(std::span<const SelectionOutcome> outcomes,
                        const std::map<std::string, bool>& gold_flags,
                        const IdentificationMode& mode) {
  const Confusion c = identification_confusion(outcomes, gold_flags, mode);
  return prf_from_confusion(c.tp, c.fp, c.fn);
}

BucketFractions bucket_stats(std::span<const SelectionOutcome> outcomes) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::kEmptyOutcomes, kModule, "no outcomes");
  }
  std::uint64_t changed = 0, kept = 0, none = 0;
  for (const auto& o : outcomes) {
    switch (o.bucket) {
      case Bucket::kChanged: ++changed; break;
      case Bucket::kKeptOriginal: ++kept; break;
      case Bucket::kNoCandidates: ++none; break;
    }
  }
  const auto total = static_cast<std::uint64_t>(outcomes.size());
  return {ratio(changed, total), ratio(kept, total), ratio(none, total)};
}

BootstrapResult bootstrap_ci(std::span<const int> labels, std::size_t resamples,
                             std::uint64_t seed, double z) {
  if (labels.empty()) throw Error(ErrorCode::kEmptyLabels, kModule, "no labels");
  if (resamples == 0) throw std::invalid_argument("bootstrap_ci: resamples must be positive");
  Rng rng(seed);
  const std::size_t n = labels.size();
  std::vector<double> means;
  means.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    std::uint64_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) ones += labels[rng.below(n)] != 0;
    means.push_back(static_cast<double>(ones) / static_cast<double>(n));
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= static_cast<double>(resamples);
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= static_cast<double>(resamples);
  BootstrapResult out;
  out.mean = m;
  out.stddev = std::sqrt(var);
  out.ci_low = std::clamp(m - z * out.stddev, 0.0, 1.0);
  out.ci_high = std::clamp(m + z * out.stddev, 0.0, 1.0);
  out.resamples = resamples;
  out.seed = seed;
  return out;
}

EvalReport evaluate(std::span<const SelectionOutcome> outcomes,
                    std::span<const Example> corpus, const EvalOptions& options) {
  std::unordered_map<std::string, const Example*> by_id;
  for (const auto& ex : corpus) by_id.emplace(ex.id, &ex);

  EvalReport report;
  report.examples = outcomes.size();
  report.buckets = bucket_stats(outcomes);

  std::map<std::string, bool> flags;
  bool all_flagged = true;
  PRF r1{}, r2{}, rl{};
  for (const auto& o : outcomes) {
    auto it = by_id.find(o.example_id);
    if (it == by_id.end()) {
      all_flagged = false;
      continue;
    }
    const Example& ex = *it->second;
    if (auto flag = gold_flag(ex)) flags[o.example_id] = *flag;
    else all_flagged = false;
    if (!ex.reference) continue;
    ++report.with_reference;
    const auto add = [](PRF& acc, const PRF& p) {
      acc.precision += p.precision;
      acc.recall += p.recall;
      acc.f1 += p.f1;
    };
    add(r1, rouge_n(o.chosen.text, *ex.reference, 1));
    add(r2, rouge_n(o.chosen.text, *ex.reference, 2));
    add(rl, rouge_l(o.chosen.text, *ex.reference));
  }
  if (report.with_reference > 0) {
    const double k = static_cast<double>(report.with_reference);
    for (PRF* p : {&r1, &r2, &rl}) {
      p->precision /= k;
      p->recall /= k;
      p->f1 /= k;
    }
  }
  report.rouge1 = r1;
  report.rouge2 = r2;
  report.rougeL = rl;

  std::vector<int> labels;
  labels.reserve(outcomes.size());
  if (all_flagged) {
    const Confusion c = identification_confusion(outcomes, flags, options.mode);
    report.confusion = c;
    if (c.tp + c.fp + c.fn > 0) {
      report.identification = prf_from_confusion(c.tp, c.fp, c.fn);
    }
    for (const auto& o : outcomes) {
      labels.push_back(predicted_hallucinated(o, options.mode) == flags[o.example_id]);
    }
    report.bootstrap_target = "identification_accuracy";
  } else {
    for (const auto& o : outcomes) labels.push_back(o.bucket == Bucket::kChanged);
    report.bootstrap_target = "changed_rate";
  }
  report.bootstrap =
      bootstrap_ci(labels, options.resamples, options.seed, options.z);
  return report;
}

Json to_json(const PRF& prf) {
  Json j;
  j["precision"] = prf.precision;
  j["recall"] = prf.recall;
  j["f1"] = prf.f1;
  return j;
}

Json to_json(const EvalReport& report) {
  Json j;
  j["examples"] = report.examples;
  j["with_reference"] = report.with_reference;
  j["rouge1"] = to_json(report.rouge1);
  j["rouge2"] = to_json(report.rouge2);
  j["rougeL"] = to_json(report.rougeL);
  j["identification"] =
      report.identification ? to_json(*report.identification) : Json(nullptr);
  if (report.confusion) {
    const auto& c = *report.confusion;
    j["confusion"] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
  }
  j["buckets"] = {{"changed", report.buckets.changed},
                  {"kept", report.buckets.kept},
                  {"none", report.buckets.none}};
  if (report.bootstrap) {
    const auto& b = *report.bootstrap;
    j["bootstrap"] = {{"target", report.bootstrap_target},
                      {"mean", b.mean},
                      {"stddev", b.stddev},
                      {"ci_low", b.ci_low},
                      {"ci_high", b.ci_high},
                      {"resamples", b.resamples},
                      {"seed", b.seed}};
  }
  j["bertscore"] = nullptr;
  j["feqa"] = nullptr;
  return j;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char line[160];
  const auto row = [&](const char* name, const PRF& p) {
    std::snprintf(line, sizeof line, "%-16s %9.4f %9.4f %9.4f\n", name,
                  p.precision, p.recall, p.f1);
    out += line;
  };
  std::snprintf(line, sizeof line, "examples: %zu (with reference: %zu)\n",
                report.examples, report.with_reference);
  out += line;
  std::snprintf(line, sizeof line, "%-16s %9s %9s %9s\n", "metric", "P", "R", "F1");
  out += line;
  row("rouge1", report.rouge1);
  row("rouge2", report.rouge2);
  row("rougeL", report.rougeL);
  if (report.identification) row("identification", *report.identification);
  std::snprintf(line, sizeof line, "buckets: changed %.4f  kept %.4f  none %.4f\n",
                report.buckets.changed, report.buckets.kept, report.buckets.none);
  out += line;
  if (report.bootstrap) {
    const auto& b = *report.bootstrap;
    std::snprintf(line, sizeof line,
                  "bootstrap %s: mean %.4f  sd %.4f  ci [%.4f, %.4f]  (%zu resamples)\n",
                  report.bootstrap_target.c_str(), b.mean, b.stddev, b.ci_low,
                  b.ci_high, b.resamples);
    out += line;
  }
  return out;
}

}  // namespace hallufix
