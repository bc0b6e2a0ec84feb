#include "fixtures.h"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "hallufix/text.h"

namespace hallufix::testing {

namespace {

const std::vector<std::string> kFirstNames = {
    "Alice", "Bruno", "Carla", "Dmitri", "Elena", "Farid", "Greta", "Hector",
    "Ingrid", "Jonas", "Keiko", "Lars", "Marta", "Nikolai", "Olga", "Pablo",
    "Quentin", "Rosa", "Stefan", "Tamara", "Ulrich", "Vera", "Walter", "Ximena",
    "Yusuf", "Zofia", "Amir", "Beatriz", "Cyril", "Dagny"};
const std::vector<std::string> kLastNames = {
    "Abbott", "Brennan", "Castillo", "Dunmore", "Eriksen", "Fairweather",
    "Gallagher", "Hartmann", "Ivanova", "Jablonski", "Kowalczyk", "Lindqvist",
    "Moreau", "Nakamura", "Okafor", "Pemberton", "Quigley", "Rasmussen",
    "Sandoval", "Thornbury", "Underhill", "Valdivia", "Whitcombe", "Yardley",
    "Zeller", "Ashdown", "Blackwood", "Crowther", "Delacroix", "Ellsworth"};
const std::vector<std::string> kOrgStems = {
    "Northwind", "Bluestone", "Ironbridge", "Silverline", "Redwater", "Greenfield",
    "Oakhurst", "Brightwell", "Stonegate", "Clearpath", "Highmoor", "Kestrel",
    "Lakeshore", "Marlow", "Pinecrest", "Quarryside", "Ravenholt", "Sunbury"};
const std::vector<std::string> kOrgSuffixes = {"Holdings", "Industries", "Group",
                                               "Motors", "Energy", "Logistics"};
const std::vector<std::string> kCities = {
    "Aberdeen", "Bordeaux", "Cordoba", "Dortmund", "Eindhoven", "Florence",
    "Gdansk", "Hamburg", "Innsbruck", "Jaipur", "Krakow", "Leipzig", "Malmo",
    "Nantes", "Osaka", "Porto", "Quito", "Rotterdam", "Seville", "Tampere",
    "Utrecht", "Valencia", "Wroclaw", "Zagreb"};
const std::vector<std::string> kMonths = {
    "January", "February", "March", "April", "June", "July", "August",
    "September", "October", "November", "December"};

struct Slots {
  std::map<std::string, std::string> values;
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

std::unordered_set<std::string> word_set(const std::string& text) {
  auto words = text::word_tokens(text);
  return {words.begin(), words.end()};
}

bool shares_word(const std::string& surface, const std::unordered_set<std::string>& words) {
  for (const auto& w : text::word_tokens(surface)) {
    if (words.count(w)) return true;
  }
  return false;
}

std::string numeric_part(const std::string& v) {
  const auto first = v.find_first_of("0123456789");
  const auto last = v.find_last_of("0123456789");
  return v.substr(first, last - first + 1);
}

std::string person(Rng& rng) { return pick(rng, kFirstNames) + " " + pick(rng, kLastNames); }
std::string org(Rng& rng) { return pick(rng, kOrgStems) + " " + pick(rng, kOrgSuffixes); }
std::string city(Rng& rng) { return pick(rng, kCities); }
std::string date(Rng& rng) {
  return std::to_string(1 + rng.below(28)) + " " + pick(rng, kMonths) + " " +
         std::to_string(2001 + rng.below(20));
}
std::string money(Rng& rng) {
  static const std::vector<std::string> kSymbols = {"$", "£", "€"};
  const auto whole = 2 + rng.below(97);
  const auto tenth = rng.below(10);
  return pick(rng, kSymbols) + std::to_string(whole) + "." + std::to_string(tenth) +
         (rng.below(2) ? "m" : "bn");
}
std::string percent(Rng& rng) { return std::to_string(2 + rng.below(40)) + "%"; }

// Draws until the value differs from everything in `taken` (by tokens when
// `disjoint` is set).
template <typename Gen>
std::string fresh(Rng& rng, Gen gen, const std::vector<std::string>& taken) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string v = gen(rng);
    bool clash = false;
    for (const auto& t : taken) {
      const auto tw = word_set(t);
      if (shares_word(v, tw)) clash = true;
    }
    if (!clash) return v;
  }
  throw std::runtime_error("fixture generator ran out of distinct values");
}

std::string fill(std::string_view pattern, const Slots& slots) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '{') {
      const auto close = pattern.find('}', i);
      out += slots.values.at(std::string(pattern.substr(i + 1, close - i - 1)));
      i = close;
    } else {
      out.push_back(pattern[i]);
    }
  }
  return out;
}

const std::vector<std::vector<std::string>> kDocumentSentences = {
    {"{P1}, the chief executive of {O1}, said on {D1} that the group would spend "
     "{M1} on a new factory in {G1}.",
     "On {D1}, {O1} chief executive {P1} confirmed plans to spend {M1} on a new "
     "factory in {G1}."},
    {"The plan was criticised by {P2} of {O2}, a rival firm based in {G2}.",
     "{O2}, a rival firm based in {G2}, said through its chair {P2} that the plan "
     "was unrealistic."},
    {"{P1} said construction would start before {D2} and that the total cost "
     "could rise to {M2}.",
     "Construction is expected to start before {D2}, and {P1} warned the cost "
     "could rise to {M2}."},
    {"Shares in {O1} rose by {C1} in early trading.",
     "Shares in {O1} closed {C1} higher after the announcement."},
    {"Analysts said the market had expected the announcement for several weeks.",
     "Local officials welcomed the news, saying hundreds of jobs would be created.",
     "Trade unions said they would seek talks with management."},
};

const std::vector<std::string> kSummaries = {
    "{O1} is to spend {M1} on a new factory in {G1}, its chief executive {P1} has said.",
    "{P1} has announced that {O1} will build a factory in {G1} at a cost of {M1}.",
    "A new factory costing {M1} will be built in {G1} by {O1}, according to {P1}.",
    "{P2} of {O2} has criticised plans by {O1} to build a factory in {G1}.",
    "Work on a new {O1} factory in {G1} will start before {D2}, {P1} has said.",
    "Shares in {O1} rose {C1} after it announced plans for a factory in {G1}.",
};

// Slot key -> generator for the planted replacement.
std::string regenerate(Rng& rng, const std::string& key) {
  switch (key[0]) {
    case 'P': return person(rng);
    case 'O': return org(rng);
    case 'G': return city(rng);
    case 'D': return date(rng);
    case 'M': return money(rng);
    case 'C': return percent(rng);
  }
  throw std::logic_error("unknown slot " + key);
}

std::vector<std::string> slot_keys(std::string_view pattern) {
  std::vector<std::string> keys;
  for (std::size_t i = pattern.find('{'); i != std::string_view::npos;
       i = pattern.find('{', i + 1)) {
    keys.emplace_back(pattern.substr(i + 1, pattern.find('}', i) - i - 1));
  }
  return keys;
}

}  // namespace

PlantedCorpus make_planted_corpus(std::size_t n, std::uint64_t seed,
                                  const std::string& id_prefix) {
  Rng rng(seed);
  PlantedCorpus corpus;
  for (std::size_t i = 0; i < n; ++i) {
    Slots s;
    std::vector<std::string> taken;
    const auto draw = [&](const std::string& key, auto gen) {
      s.values[key] = fresh(rng, gen, taken);
      taken.push_back(s.values[key]);
    };
    draw("P1", person);
    draw("P2", person);
    draw("O1", org);
    draw("O2", org);
    draw("G1", city);
    draw("G2", city);
    draw("D1", date);
    draw("D2", date);
    draw("M1", money);
    draw("M2", money);
    draw("C1", percent);

    std::string document;
    for (const auto& variants : kDocumentSentences) {
      if (!document.empty()) document += " ";
      document += fill(pick(rng, variants), s);
    }
    const std::string& pattern = pick(rng, kSummaries);
    const std::string summary = fill(pattern, s);

    Example clean;
    clean.id = id_prefix + std::to_string(i);
    clean.document = document;
    clean.summary = summary;
    clean.reference = summary;
    clean.metadata["hallucinated"] = "false";

    const auto keys = slot_keys(pattern);
    const std::string key = pick(rng, keys);
    const auto doc_words = word_set(document);
    std::string planted_value;
    for (int attempt = 0; attempt < 1000 && planted_value.empty(); ++attempt) {
      std::string v = regenerate(rng, key);
      if (shares_word(v, doc_words) || shares_word(v, word_set(summary))) continue;
      // "2%" would otherwise hide inside "12%" after normalization.
      const bool numeric = key[0] == 'M' || key[0] == 'C';
      if (numeric && document.find(numeric_part(v)) != std::string::npos) continue;
      planted_value = v;
    }
    if (planted_value.empty()) throw std::runtime_error("cannot plant entity");
    Slots planted_slots = s;
    planted_slots.values[key] = planted_value;

    Example planted = clean;
    planted.id = id_prefix + std::to_string(i) + "-planted";
    planted.summary = fill(pattern, planted_slots);
    planted.metadata["hallucinated"] = "true";

    corpus.clean.push_back(std::move(clean));
    corpus.planted.push_back(std::move(planted));
    corpus.planted_surface.push_back(planted_value);
    corpus.original_surface.push_back(s.values[key]);
  }
  return corpus;
}

std::string planted_gazetteer_tsv() {
  std::string out = "# generated fixture gazetteer\n";
  for (const auto& f : kFirstNames) {
    for (const auto& l : kLastNames) out += "PERSON\t" + f + " " + l + "\n";
  }
  for (const auto& o : kOrgStems) {
    for (const auto& x : kOrgSuffixes) out += "ORG\t" + o + " " + x + "\n";
  }
  for (const auto& c : kCities) out += "GPE\t" + c + "\n";
  return out;
}

CandidateInstance random_candidate_instance(Rng& rng, std::size_t max_hallucinated,
                                            std::size_t max_pool) {
  static const std::vector<std::string> kFiller = {
      "the", "report", "said", "on", "Tuesday", "that", "officials", "had",
      "agreed", "a", "new", "deal", "with", "über", "naïve", "café", "after", "talks"};
  static const std::vector<EntityLabel> kLabels = {
      EntityLabel::kPerson, EntityLabel::kOrg, EntityLabel::kGpe,
      EntityLabel::kProduct, EntityLabel::kEvent};

  CandidateInstance inst;
  inst.example.id = "inst";

  // Per-label pools of distinct lowercase-unique surfaces.
  std::size_t serial = 0;
  const auto surface = [&](EntityLabel label) {
    static const std::vector<std::string> kStems = {"Zoë", "Łukasz", "Amber", "Brook",
                                                    "Cedar", "Dale", "Ember", "Frost"};
    return kStems[rng.below(kStems.size())] + std::string(label_name(label)).substr(0, 2) +
           std::to_string(serial++);
  };

  const std::size_t n_halluc = 1 + rng.below(max_hallucinated);
  std::vector<EntityLabel> halluc_labels;
  for (std::size_t i = 0; i < n_halluc; ++i) halluc_labels.push_back(pick(rng, kLabels));

  // Source: filler interleaved with entity mentions, some repeated.
  std::vector<std::pair<std::string, EntityLabel>> source_entities;
  for (EntityLabel label : kLabels) {
    const std::size_t pool = rng.below(max_pool + 1);
    for (std::size_t k = 0; k < pool; ++k) {
      std::string s = surface(label);
      source_entities.emplace_back(s, label);
      if (rng.below(3) == 0) source_entities.emplace_back(s, label);
    }
  }
  rng.shuffle(std::span(source_entities));

  std::string doc;
  std::size_t doc_len = 0;
  const auto append = [](std::string& text, std::size_t& len, const std::string& piece) {
    if (!text.empty()) {
      text += " ";
      ++len;
    }
    text += piece;
    len += text::scalar_length(piece);
  };
  for (const auto& [s, label] : source_entities) {
    const std::size_t words = rng.below(3);
    for (std::size_t w = 0; w < words; ++w) append(doc, doc_len, pick(rng, kFiller));
    const std::size_t before = doc.empty() ? 0 : doc_len + 1;
    append(doc, doc_len, s);
    inst.source_mentions.push_back(
        {before, doc_len, s, label, normalize(s, label)});
  }
  append(doc, doc_len, "end.");
  inst.example.document = doc;

  // Summary: hallucinated mentions plus a few grounded ones.
  std::string sum;
  std::size_t sum_len = 0;
  for (std::size_t i = 0; i < n_halluc; ++i) {
    const std::size_t words = 1 + rng.below(3);
    for (std::size_t w = 0; w < words; ++w) append(sum, sum_len, pick(rng, kFiller));
    if (!source_entities.empty() && rng.below(2) == 0) {
      const auto& [gs, gl] = pick(rng, source_entities);
      const std::size_t before = sum_len + 1;
      append(sum, sum_len, gs);
      inst.summary_mentions.push_back({before, sum_len, gs, gl, normalize(gs, gl)});
      append(sum, sum_len, pick(rng, kFiller));
    }
    const std::string h = "Ghost" + std::to_string(i) + "x" + std::to_string(rng.below(1000));
    const std::size_t before = sum_len + 1;
    append(sum, sum_len, h);
    EntityMention m{before, sum_len, h, halluc_labels[i], normalize(h, halluc_labels[i])};
    inst.summary_mentions.push_back(m);
    inst.hallucinated.push_back(m);
  }
  append(sum, sum_len, "today.");
  inst.example.summary = sum;
  return inst;
}

std::set<std::string> brute_force_candidate_texts(const CandidateInstance& instance) {
  const auto& hall = instance.hallucinated;
  // Pools by lowercase surface, first occurrence order.
  std::vector<std::vector<std::string>> pools;
  for (const auto& h : hall) {
    std::vector<std::string> pool;
    std::set<std::string> seen{text::fold_case(std::string_view(h.surface))};
    for (const auto& m : instance.source_mentions) {
      if (m.label != h.label) continue;
      if (seen.insert(text::fold_case(std::string_view(m.surface))).second) {
        pool.push_back(m.surface);
      }
    }
    pools.push_back(std::move(pool));
  }
  const std::u32string summary = text::to_u32(instance.example.summary);
  const auto build = [&](const std::vector<int>& choice) {
    std::string out;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < hall.size(); ++i) {
      out += text::slice(summary, cursor, hall[i].start);
      out += choice[i] < 0 ? hall[i].surface : pools[i][static_cast<std::size_t>(choice[i])];
      cursor = hall[i].end;
    }
    out += text::slice(summary, cursor, summary.size());
    return out;
  };

  std::set<std::string> texts;
  std::vector<int> choice(hall.size(), -1);
  const bool all_pools = std::all_of(pools.begin(), pools.end(),
                                     [](const auto& p) { return !p.empty(); });
  // Odometer over {-1, 0..|pool|-1} per mention.
  while (true) {
    const auto subs = std::count_if(choice.begin(), choice.end(), [](int c) { return c >= 0; });
    if (subs <= 1 || (all_pools && static_cast<std::size_t>(subs) == hall.size())) {
      texts.insert(build(choice));
    }
    std::size_t i = 0;
    for (; i < hall.size(); ++i) {
      if (choice[i] + 1 < static_cast<int>(pools[i].size())) {
        ++choice[i];
        break;
      }
      choice[i] = -1;
    }
    if (i == hall.size()) break;
  }
  return texts;
}

Example reelection_example() {
  Example ex;
  ex.id = "reelection";
  ex.document =
      "He was re-elected for a second term by the UN General Assembly, unopposed "
      "and unanimously, on 21 June 2011, with effect from 1 January 2012. Mr. Ban "
      "describes his priorities as mobilising world leaders to deal with climate "
      "change, economic upheaval, pandemics, and increasing pressures involving "
      "food, energy and water.";
  ex.summary =
      "The United Nations Secretary-General Ban Ki-moon was elected for a second "
      "term in 2007.";
  return ex;
}

std::string reelection_gazetteer_tsv() {
  return "PERSON\tBan Ki-moon\n"
         "PERSON\tBan\n"
         "ORG\tUN General Assembly\n";
}

}  // namespace hallufix::testing
