#include "hallufix/contrast.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_set>

#include "hallufix/error.h"
#include "hallufix/random.h"
#include "hallufix/text.h"

namespace hallufix {

namespace {

constexpr const char* kModule = "contrast";

bool is_subset(const std::vector<std::string>& small,
               const std::vector<std::string>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

class SourceIndex {
 public:
  SourceIndex(std::string_view source,
              std::span<const EntityMention> source_mentions)
      : source_(source), mentions_(source_mentions) {
    for (const auto& m : mentions_) {
      tokens_.push_back(name_tokens(m.normalized));
      values_.push_back(is_numeric_label(m.label)
                            ? canonical_values(m.normalized, m.label)
                            : std::vector<std::string>{});
    }
  }

  bool grounded(const EntityMention& mention) {
    if (source_.find(mention.surface) != std::string_view::npos) return true;
    if (!mention.normalized.empty() &&
        normalized_source(mention.label).find(mention.normalized) !=
            std::string::npos) {
      return true;
    }
    if (is_name_label(mention.label)) {
      const auto own = name_tokens(mention.normalized);
      if (own.empty()) return false;
      for (std::size_t i = 0; i < mentions_.size(); ++i) {
        if (tokens_[i].empty()) continue;
        if (is_subset(own, tokens_[i]) || is_subset(tokens_[i], own)) {
          return true;
        }
      }
      return false;
    }
    const auto own = canonical_values(mention.normalized, mention.label);
    if (own.empty()) return false;
    for (std::size_t i = 0; i < mentions_.size(); ++i) {
      if (!is_numeric_label(mentions_[i].label)) continue;
      if (is_subset(own, values_[i])) return true;
    }
    return false;
  }

 private:
  const std::string& normalized_source(EntityLabel label) {
    auto it = normalized_.find(label);
    if (it == normalized_.end()) {
      it = normalized_.emplace(label, normalize(source_, label)).first;
    }
    return it->second;
  }

  std::string_view source_;
  std::span<const EntityMention> mentions_;
  std::vector<std::vector<std::string>> tokens_;
  std::vector<std::vector<std::string>> values_;
  std::map<EntityLabel, std::string> normalized_;
};

const std::string& required_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::kMalformedRecord, kModule,
                std::string("missing string field '") + key + "'");
  }
  return it->get_ref<const std::string&>();
}

EntityLabel required_label(const Json& j, const char* key) {
  auto label = parse_label(required_string(j, key));
  if (!label) {
    throw Error(ErrorCode::kMalformedRecord, kModule,
                "unknown entity label '" + required_string(j, key) + "'");
  }
  return *label;
}

std::size_t required_offset(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw Error(ErrorCode::kMalformedRecord, kModule,
                std::string("missing offset field '") + key + "'");
  }
  return it->get<std::size_t>();
}

}  // namespace

std::vector<EntityMention> find_hallucinated(
    std::string_view source, std::span<const EntityMention> source_mentions,
    std::span<const EntityMention> summary_mentions,
    const LabelFilter& labels) {
  SourceIndex index(source, source_mentions);
  std::vector<EntityMention> flagged;
  for (const auto& mention : summary_mentions) {
    if (!labels.allows(mention.label)) continue;
    if (!index.grounded(mention)) flagged.push_back(mention);
  }
  return flagged;
}

std::string splice(std::string_view text, std::span<const Substitution> subs) {
  std::u32string out = text::to_u32(text);
  std::vector<const Substitution*> order;
  for (const auto& s : subs) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->replaced.start > b->replaced.start;
  });
  for (const Substitution* s : order) {
    out.replace(s->replaced.start, s->replaced.end - s->replaced.start,
                text::to_u32(s->replacement.surface));
  }
  return text::to_utf8(out);
}

std::vector<std::pair<std::size_t, std::size_t>> substituted_spans(
    const CandidateSummary& candidate) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::ptrdiff_t shift = 0;
  for (const auto& s : candidate.substitutions) {
    const auto len = static_cast<std::ptrdiff_t>(
        text::scalar_length(s.replacement.surface));
    const auto start = static_cast<std::ptrdiff_t>(s.replaced.start) + shift;
    spans.emplace_back(static_cast<std::size_t>(start),
                       static_cast<std::size_t>(start + len));
    shift += len - static_cast<std::ptrdiff_t>(s.replaced.length());
  }
  return spans;
}

std::vector<EntityMention> replacement_pool(
    const EntityMention& mention,
    std::span<const EntityMention> source_mentions) {
  std::vector<const EntityMention*> ordered;
  for (const auto& m : source_mentions) ordered.push_back(&m);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->start < b->start; });
  std::unordered_set<std::string> seen{mention.normalized};
  std::vector<EntityMention> pool;
  for (const EntityMention* m : ordered) {
    if (m->label != mention.label) continue;
    if (!seen.insert(m->normalized).second) continue;
    pool.push_back(*m);
  }
  return pool;
}

std::vector<CandidateSummary> generate_candidates(
    const Example& example, std::span<const EntityMention> source_mentions,
    std::span<const EntityMention> /*summary_mentions*/,
    std::span<const EntityMention> hallucinated, std::size_t max_candidates) {
  std::vector<CandidateSummary> out;
  out.push_back({example.summary, {}, std::nullopt});
  if (max_candidates <= 1) return out;

  std::vector<EntityMention> targets(hallucinated.begin(), hallucinated.end());
  std::sort(targets.begin(), targets.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<std::vector<EntityMention>> pools;
  for (const auto& h : targets) pools.push_back(replacement_pool(h, source_mentions));

  std::unordered_set<std::string> texts{example.summary};
  auto emit = [&](std::vector<Substitution> subs) {
    CandidateSummary c;
    c.text = splice(example.summary, subs);
    if (!texts.insert(c.text).second) return;
    c.substitutions = std::move(subs);
    out.push_back(std::move(c));
  };

  for (std::size_t i = 0; i < targets.size() && out.size() < max_candidates; ++i) {
    for (const auto& p : pools[i]) {
      if (out.size() >= max_candidates) break;
      emit({Substitution{targets[i], p}});
    }
  }

  const bool all_pools = std::all_of(pools.begin(), pools.end(),
                                     [](const auto& p) { return !p.empty(); });
  if (targets.size() < 2 || !all_pools) return out;

  // Odometer over the pools, leftmost mention most significant.
  std::vector<std::size_t> digit(targets.size(), 0);
  while (out.size() < max_candidates) {
    std::vector<Substitution> subs;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      subs.push_back({targets[i], pools[i][digit[i]]});
    }
    emit(std::move(subs));
    std::size_t k = targets.size();
    while (k > 0) {
      --k;
      if (++digit[k] < pools[k].size()) break;
      digit[k] = 0;
      if (k == 0) return out;
    }
  }
  return out;
}

std::vector<Example> filter_clean(std::span<const Example> examples,
                                  Recognizer& recognizer,
                                  const LabelFilter& labels) {
  std::vector<Example> clean;
  for (const auto& ex : examples) {
    if (!ex.reference) {
      throw Error(ErrorCode::kMissingReference, kModule,
                  "example '" + ex.id + "' has no reference summary");
    }
    const auto source_mentions = recognizer.recognize(ex.document);
    const auto ref_mentions = recognizer.recognize(*ex.reference);
    if (find_hallucinated(ex.document, source_mentions, ref_mentions, labels)
            .empty()) {
      clean.push_back(ex);
    }
  }
  return clean;
}

std::vector<TrainingPair> make_training_pairs(
    std::span<const Example> clean, Recognizer& recognizer,
    std::size_t negatives_per_example, std::uint64_t seed,
    const LabelFilter& labels) {
  std::vector<TrainingPair> pairs;
  for (const auto& ex : clean) {
    if (!ex.reference) {
      throw Error(ErrorCode::kMissingReference, kModule,
                  "example '" + ex.id + "' has no reference summary");
    }
    const auto source_mentions = recognizer.recognize(ex.document);
    const auto gold_mentions = recognizer.recognize(*ex.reference);
    std::vector<TrainingPair> options;
    for (const auto& gold : gold_mentions) {
      if (!labels.allows(gold.label)) continue;
      for (const auto& repl : replacement_pool(gold, source_mentions)) {
        const Substitution sub{gold, repl};
        TrainingPair pair;
        pair.example_id = ex.id;
        pair.source = ex.document;
        pair.positive = *ex.reference;
        pair.negative = splice(*ex.reference, std::span(&sub, 1));
        if (pair.negative == pair.positive) continue;
        pair.corrupted_span = {gold.surface, repl.surface, gold.label, gold.start};
        options.push_back(std::move(pair));
      }
    }
    if (options.size() > negatives_per_example) {
      std::vector<std::size_t> order(options.size());
      std::iota(order.begin(), order.end(), 0);
      Rng rng(derive_seed(seed, ex.id));
      rng.shuffle(std::span(order));
      order.resize(negatives_per_example);
      std::sort(order.begin(), order.end());
      std::vector<TrainingPair> kept;
      for (std::size_t i : order) kept.push_back(std::move(options[i]));
      options = std::move(kept);
    }
    for (auto& p : options) pairs.push_back(std::move(p));
  }
  return pairs;
}

Json to_json(const EntityMention& mention) {
  Json j;
  j["start"] = mention.start;
  j["end"] = mention.end;
  j["surface"] = mention.surface;
  j["label"] = std::string(label_name(mention.label));
  j["normalized"] = mention.normalized;
  return j;
}

EntityMention mention_from_json(const Json& record) {
  EntityMention m;
  m.start = required_offset(record, "start");
  m.end = required_offset(record, "end");
  m.surface = required_string(record, "surface");
  m.label = required_label(record, "label");
  m.normalized = required_string(record, "normalized");
  return m;
}

Json candidate_to_json(const CandidateSummary& candidate,
                       std::string_view example_id, std::size_t index) {
  Json j;
  j["example_id"] = std::string(example_id);
  j["index"] = index;
  j["text"] = candidate.text;
  if (candidate.is_original()) {
    j["provenance"] = "original";
  } else {
    Json subs = Json::array();
    for (const auto& s : candidate.substitutions) {
      subs.push_back({{"replaced", to_json(s.replaced)},
                      {"replacement", to_json(s.replacement)}});
    }
    j["provenance"] = std::move(subs);
  }
  if (candidate.score) j["score"] = *candidate.score;
  return j;
}

CandidateSummary candidate_from_json(const Json& record) {
  CandidateSummary c;
  c.text = required_string(record, "text");
  auto prov = record.find("provenance");
  if (prov == record.end()) {
    throw Error(ErrorCode::kMalformedRecord, kModule, "missing provenance");
  }
  if (prov->is_array()) {
    for (const auto& s : *prov) {
      c.substitutions.push_back({mention_from_json(s.at("replaced")),
                                 mention_from_json(s.at("replacement"))});
    }
  } else if (!(prov->is_string() && prov->get<std::string>() == "original")) {
    throw Error(ErrorCode::kMalformedRecord, kModule, "bad provenance");
  }
  if (auto s = record.find("score"); s != record.end() && s->is_number()) {
    c.score = s->get<double>();
  }
  return c;
}

Json to_json(const TrainingPair& pair) {
  Json j;
  j["example_id"] = pair.example_id;
  j["source"] = pair.source;
  j["positive"] = pair.positive;
  j["negative"] = pair.negative;
  j["corrupted_span"] = {
      {"replaced", pair.corrupted_span.replaced},
      {"replacement", pair.corrupted_span.replacement},
      {"label", std::string(label_name(pair.corrupted_span.label))},
      {"offset", pair.corrupted_span.offset},
  };
  return j;
}

TrainingPair pair_from_json(const Json& record) {
  TrainingPair p;
  p.example_id = required_string(record, "example_id");
  p.source = required_string(record, "source");
  p.positive = required_string(record, "positive");
  p.negative = required_string(record, "negative");
  auto span = record.find("corrupted_span");
  if (span == record.end() || !span->is_object()) {
    throw Error(ErrorCode::kMalformedRecord, kModule, "missing corrupted_span");
  }
  p.corrupted_span.replaced = required_string(*span, "replaced");
  p.corrupted_span.replacement = required_string(*span, "replacement");
  p.corrupted_span.label = required_label(*span, "label");
  p.corrupted_span.offset = required_offset(*span, "offset");
  return p;
}

}  // namespace hallufix
