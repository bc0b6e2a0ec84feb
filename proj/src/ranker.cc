#include "hallufix/ranker.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "hallufix/error.h"
#include "hallufix/random.h"
#include "hallufix/text.h"

namespace hallufix {

namespace {

constexpr const char* kModule = "ranker";
constexpr const char* kModelFormat = "hallufix-ranker";
constexpr std::size_t kFlank = 5;

using text::Token;
using text::TokenKind;

// Up to kFlank word tokens on each side of [start, end).
std::vector<std::string> flank_tokens(const std::vector<Token>& tokens,
                                      std::size_t start, std::size_t end) {
  std::vector<std::string> left;
  std::vector<std::string> right;
  for (const Token& t : tokens) {
    if (t.kind != TokenKind::kWord) continue;
    if (t.end <= start) left.push_back(text::to_utf8(text::fold_case(t.view)));
    if (t.start >= end && right.size() < kFlank) {
      right.push_back(text::to_utf8(text::fold_case(t.view)));
    }
  }
  std::vector<std::string> out;
  const std::size_t from = left.size() > kFlank ? left.size() - kFlank : 0;
  out.insert(out.end(), left.begin() + static_cast<std::ptrdiff_t>(from), left.end());
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

std::unordered_set<std::string> content_set(const std::vector<std::string>& words) {
  std::unordered_set<std::string> out;
  for (const auto& w : words) {
    if (!text::is_stopword(w)) out.insert(w);
  }
  return out;
}

double overlap(const std::unordered_set<std::string>& a,
               const std::unordered_set<std::string>& b) {
  if (a.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& w : a) shared += b.count(w);
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const RankerModel& model, const FeatureVector& f) {
  double z = model.bias;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    z += model.weights[i] * f.values[i];
  }
  return z;
}

void check_schema(const RankerModel& model, const FeatureVector& f) {
  if (f.values.size() != model.weights.size()) {
    throw Error(ErrorCode::kSchemaMismatch, kModule,
                "feature vector has " + std::to_string(f.values.size()) +
                    " values, model expects " +
                    std::to_string(model.weights.size()));
  }
}

// Clamped probability and its derivative with respect to the logit.
struct Probability {
  double value;
  double slope;
};

Probability clamped(double z, double eps) {
  const double p = sigmoid(z);
  if (p <= eps) return {eps, 0.0};
  if (p >= 1.0 - eps) return {1.0 - eps, 0.0};
  return {p, p * (1.0 - p)};
}

EntityMention locate(std::string_view source,
                     std::span<const EntityMention> source_mentions,
                     const std::string& surface, EntityLabel label) {
  const std::u32string src = text::to_u32(source);
  const std::u32string needle = text::to_u32(surface);
  if (auto hits = text::find_all(src, needle); !hits.empty()) {
    EntityMention m;
    m.start = hits.front();
    m.end = hits.front() + needle.size();
    m.surface = surface;
    m.label = label;
    m.normalized = normalize(surface, label);
    return m;
  }
  const std::string norm = normalize(surface, label);
  for (const auto& m : source_mentions) {
    if (m.label == label && m.normalized == norm) return m;
  }
  // Not locatable: a zero-width anchor keeps every source-side feature at 0.
  EntityMention m;
  m.surface = surface;
  m.label = label;
  m.normalized = norm;
  return m;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

const std::array<FeatureSpec, 6>& feature_schema() {
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static const std::array<FeatureSpec, 6> kSchema = {{
      {"grounded_mentions", 0.0, 1.0},
      {"is_original", 0.0, 1.0},
      {"token_support", 0.0, 1.0},
      {"replacement_freq", 0.0, kInf},
      {"replacement_lead", 0.0, 1.0},
      {"context_overlap", 0.0, 1.0},
  }};
  return kSchema;
}

RankerModel RankerModel::zeros(double margin) {
  RankerModel m;
  for (const auto& spec : feature_schema()) m.feature_names.emplace_back(spec.name);
  m.weights.assign(m.feature_names.size(), 0.0);
  m.margin = margin;
  return m;
}

std::string TrainConfig::digest() const {
  std::ostringstream os;
  os << "lr=" << format_double(learning_rate) << ";epochs=" << epochs
     << ";margin=" << format_double(margin) << ";batch=" << batch_size
     << ";seed=" << seed << ";eps=" << format_double(epsilon);
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(os.str());
  return hex.str();
}

FeatureVector featurize(std::string_view source,
                        const CandidateSummary& candidate,
                        std::span<const EntityMention> source_mentions,
                        std::span<const EntityMention> candidate_mentions) {
  FeatureVector f;
  f.values.assign(feature_schema().size(), 0.0);

  const auto flagged =
      find_hallucinated(source, source_mentions, candidate_mentions);
  f.values[0] = candidate_mentions.empty()
                    ? 1.0
                    : 1.0 - static_cast<double>(flagged.size()) /
                                static_cast<double>(candidate_mentions.size());
  f.values[1] = candidate.is_original() ? 1.0 : 0.0;

  const auto source_words = text::word_tokens(source);
  const std::unordered_set<std::string> source_vocab(source_words.begin(),
                                                     source_words.end());
  std::size_t content = 0;
  std::size_t supported = 0;
  for (const auto& w : text::word_tokens(candidate.text)) {
    if (text::is_stopword(w)) continue;
    ++content;
    supported += source_vocab.count(w);
  }
  f.values[2] = content == 0 ? 1.0
                             : static_cast<double>(supported) /
                                   static_cast<double>(content);

  if (candidate.is_original()) return f;

  const std::u32string src = text::to_u32(source);
  const std::u32string cand = text::to_u32(candidate.text);
  const auto src_tokens = text::tokenize(src);
  const auto cand_tokens = text::tokenize(cand);
  const auto spans = substituted_spans(candidate);

  double freq = 0.0;
  double lead = 0.0;
  double context = 0.0;
  for (std::size_t i = 0; i < candidate.substitutions.size(); ++i) {
    const auto& repl = candidate.substitutions[i].replacement;
    const std::u32string needle = text::to_u32(repl.surface);
    std::vector<std::size_t> hits = text::find_all(src, needle);
    freq += std::log1p(static_cast<double>(hits.size()));
    if (!hits.empty() && !src.empty()) {
      lead += 1.0 - static_cast<double>(hits.front()) /
                        static_cast<double>(src.size());
    }
    if (hits.empty() && mention_is_valid(repl, src)) hits.push_back(repl.start);

    const auto cand_ctx = content_set(
        flank_tokens(cand_tokens, spans[i].first, spans[i].second));
    double best = 0.0;
    for (std::size_t at : hits) {
      const auto src_ctx =
          content_set(flank_tokens(src_tokens, at, at + needle.size()));
      best = std::max(best, overlap(cand_ctx, src_ctx));
    }
    context += best;
  }
  const auto n = static_cast<double>(candidate.substitutions.size());
  f.values[3] = freq / n;
  f.values[4] = lead / n;
  f.values[5] = context / n;
  return f;
}

double score(const RankerModel& model, const FeatureVector& features,
             double eps) {
  check_schema(model, features);
  return clamped(dot(model, features), eps).value;
}

double pair_loss(double positive, double negative, double margin, double eps) {
  positive = std::clamp(positive, eps, 1.0 - eps);
  negative = std::clamp(negative, eps, 1.0 - eps);
  const double hinge = std::max(0.0, negative - positive + margin);
  return -std::log(positive) - std::log(1.0 - negative) + hinge;
}

Gradient pair_gradient(const RankerModel& model, const FeatureVector& positive,
                       const FeatureVector& negative, double margin,
                       double eps) {
  check_schema(model, positive);
  check_schema(model, negative);
  const Probability pos = clamped(dot(model, positive), eps);
  const Probability neg = clamped(dot(model, negative), eps);
  const bool hinge_active = neg.value - pos.value + margin > 0.0;

  const double d_pos = (-1.0 / pos.value - (hinge_active ? 1.0 : 0.0)) * pos.slope;
  const double d_neg =
      (1.0 / (1.0 - neg.value) + (hinge_active ? 1.0 : 0.0)) * neg.slope;

  Gradient g;
  g.weights.resize(model.weights.size());
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    g.weights[i] = d_pos * positive.values[i] + d_neg * negative.values[i];
  }
  g.bias = d_pos + d_neg;
  return g;
}

FeaturePair featurize_pair(const TrainingPair& pair, Recognizer& recognizer) {
  const auto source_mentions = recognizer.recognize(pair.source);
  const auto& span = pair.corrupted_span;

  EntityMention gold_in_positive;
  gold_in_positive.start = span.offset;
  gold_in_positive.end = span.offset + text::scalar_length(span.replaced);
  gold_in_positive.surface = span.replaced;
  gold_in_positive.label = span.label;
  gold_in_positive.normalized = normalize(span.replaced, span.label);

  EntityMention swap_in_negative = gold_in_positive;
  swap_in_negative.end = span.offset + text::scalar_length(span.replacement);
  swap_in_negative.surface = span.replacement;
  swap_in_negative.normalized = normalize(span.replacement, span.label);

  CandidateSummary negative{pair.negative,
                            {{gold_in_positive,
                              locate(pair.source, source_mentions,
                                     span.replacement, span.label)}},
                            std::nullopt};
  CandidateSummary positive{pair.positive,
                            {{swap_in_negative,
                              locate(pair.source, source_mentions,
                                     span.replaced, span.label)}},
                            std::nullopt};

  FeaturePair out;
  out.positive = featurize(pair.source, positive, source_mentions,
                           recognizer.recognize(pair.positive));
  out.negative = featurize(pair.source, negative, source_mentions,
                           recognizer.recognize(pair.negative));
  return out;
}

double ranking_accuracy(const RankerModel& model,
                        std::span<const FeaturePair> pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if (score(model, p.positive) > score(model, p.negative)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

TrainResult train_features(std::span<const FeaturePair> pairs,
                           const TrainConfig& config) {
  if (pairs.empty()) {
    throw Error(ErrorCode::kEmptyTrainingSet, kModule, "no training pairs");
  }
  if (config.learning_rate <= 0 || config.epochs <= 0 ||
      config.batch_size == 0 || config.margin < 0 || config.epsilon <= 0 ||
      config.epsilon >= 0.5) {
    throw Error(ErrorCode::kConfigInvalid, kModule, "invalid training config");
  }
  TrainResult result;
  RankerModel& model = result.model;
  model = RankerModel::zeros(config.margin);
  model.train_config_digest = config.digest();
  const std::size_t dims = model.weights.size();

  auto mean_loss = [&]() {
    double total = 0.0;
    for (const auto& p : pairs) {
      total += pair_loss(score(model, p.positive, config.epsilon),
                         score(model, p.negative, config.epsilon),
                         config.margin, config.epsilon);
    }
    return total / static_cast<double>(pairs.size());
  };

  std::vector<std::size_t> order(pairs.size());
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "epoch/" + std::to_string(epoch)));
    rng.shuffle(std::span(order));
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<double> grad_w(dims, 0.0);
      double grad_b = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const FeaturePair& p = pairs[order[k]];
        const double loss =
            pair_loss(score(model, p.positive, config.epsilon),
                      score(model, p.negative, config.epsilon), config.margin,
                      config.epsilon);
        if (!std::isfinite(loss)) {
          throw Error(ErrorCode::kNonFiniteLoss, kModule,
                      "non-finite loss at step " + std::to_string(step) +
                          " (epoch " + std::to_string(epoch) + ", pair " +
                          std::to_string(order[k]) + ")");
        }
        const Gradient g = pair_gradient(model, p.positive, p.negative,
                                         config.margin, config.epsilon);
        for (std::size_t d = 0; d < dims; ++d) grad_w[d] += g.weights[d];
        grad_b += g.bias;
      }
      const double scale = config.learning_rate / static_cast<double>(end - begin);
      for (std::size_t d = 0; d < dims; ++d) model.weights[d] -= scale * grad_w[d];
      model.bias -= scale * grad_b;
      ++step;
    }
    const double loss = mean_loss();
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFiniteLoss, kModule,
                  "non-finite epoch loss after step " + std::to_string(step));
    }
    result.report.epoch_loss.push_back(loss);
  }
  result.report.pairs = pairs.size();
  result.report.ranking_accuracy = ranking_accuracy(model, pairs);
  return result;
}

TrainResult train(std::span<const TrainingPair> pairs, Recognizer& recognizer,
                  const TrainConfig& config) {
  if (pairs.empty()) {
    throw Error(ErrorCode::kEmptyTrainingSet, kModule, "no training pairs");
  }
  std::vector<FeaturePair> features;
  features.reserve(pairs.size());
  for (const auto& p : pairs) features.push_back(featurize_pair(p, recognizer));
  return train_features(features, config);
}

void save_model(const RankerModel& model, const std::filesystem::path& path) {
  Json j;
  j["format"] = kModelFormat;
  j["schema_version"] = model.schema_version;
  j["features"] = model.feature_names;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["margin"] = model.margin;
  j["train_config_digest"] = model.train_config_digest;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, kModule, "cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw Error(ErrorCode::kIoFailure, kModule, "write failed for " + path.string());
  }
}

RankerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFileUnreadable, kModule, "cannot read " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kCorruptModelFile, kModule,
                 path.string() + ": " + why);
  };
  Json j;
  try {
    j = Json::parse(buffer.str());
  } catch (const std::exception& e) {
    throw corrupt(e.what());
  }
  if (!j.is_object() || j.value("format", "") != kModelFormat) {
    throw corrupt("not a ranker model file");
  }
  RankerModel m;
  try {
    m.schema_version = j.at("schema_version").get<std::string>();
    if (m.schema_version != kFeatureSchemaVersion) {
      throw Error(ErrorCode::kSchemaVersionMismatch, kModule,
                  path.string() + ": schema version '" + m.schema_version +
                      "', expected '" + kFeatureSchemaVersion + "'");
    }
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.margin = j.at("margin").get<double>();
    m.train_config_digest = j.value("train_config_digest", "");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw corrupt(e.what());
  }
  if (m.weights.size() != m.feature_names.size()) {
    throw corrupt("weight count does not match feature count");
  }
  if (m.margin < 0) throw corrupt("negative margin");
  const auto& schema = feature_schema();
  if (m.feature_names.size() != schema.size() ||
      !std::equal(m.feature_names.begin(), m.feature_names.end(), schema.begin(),
                  [](const std::string& a, const FeatureSpec& b) {
                    return a == b.name;
                  })) {
    throw Error(ErrorCode::kSchemaMismatch, kModule,
                path.string() + ": feature names do not match the schema");
  }
  return m;
}

std::vector<double> BuiltinScorer::score(
    std::string_view source, std::span<const CandidateSummary> candidates) {
  const auto source_mentions = recognizer_.recognize(source);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto mentions = recognizer_.recognize(c.text);
    scores.push_back(
        hallufix::score(model_, featurize(source, c, source_mentions, mentions)));
  }
  return scores;
}

Json to_json(const TrainReport& report) {
  Json j;
  j["pairs"] = report.pairs;
  j["epoch_loss"] = report.epoch_loss;
  j["ranking_accuracy"] = report.ranking_accuracy;
  return j;
}

}  // namespace hallufix
