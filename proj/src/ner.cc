#include "hallufix/ner.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include "hallufix/error.h"
#include "hallufix/text.h"

namespace hallufix {

namespace {

using text::Token;
using text::TokenKind;

constexpr std::array<std::string_view, 18> kLabelNames = {
    "PERSON", "NORP",    "FAC",     "ORG",      "GPE",     "LOC",
    "PRODUCT", "EVENT",  "WORK_OF_ART", "LAW",  "LANGUAGE", "DATE",
    "TIME",   "PERCENT", "MONEY",   "QUANTITY", "ORDINAL", "CARDINAL",
};

const std::unordered_map<std::string_view, int>& cardinal_words() {
  static const std::unordered_map<std::string_view, int> kWords = {
      {"zero", 0},      {"one", 1},        {"two", 2},       {"three", 3},
      {"four", 4},      {"five", 5},       {"six", 6},       {"seven", 7},
      {"eight", 8},     {"nine", 9},       {"ten", 10},      {"eleven", 11},
      {"twelve", 12},   {"thirteen", 13},  {"fourteen", 14}, {"fifteen", 15},
      {"sixteen", 16},  {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19},
      {"twenty", 20},   {"thirty", 30},    {"forty", 40},    {"fifty", 50},
      {"sixty", 60},    {"seventy", 70},   {"eighty", 80},   {"ninety", 90},
  };
  return kWords;
}

const std::unordered_map<std::string_view, int>& ordinal_words() {
  static const std::unordered_map<std::string_view, int> kWords = {
      {"first", 1}, {"second", 2},  {"third", 3}, {"fourth", 4},
      {"fifth", 5}, {"sixth", 6},   {"seventh", 7}, {"eighth", 8},
      {"ninth", 9}, {"tenth", 10},
  };
  return kWords;
}

// Power-of-ten exponent for a free-standing scale word.
std::optional<int> scale_word(std::string_view w) {
  if (w == "hundred") return 2;
  if (w == "thousand") return 3;
  if (w == "million" || w == "mn") return 6;
  if (w == "billion" || w == "bn") return 9;
  if (w == "trillion" || w == "tn") return 12;
  return std::nullopt;
}

// Exponent for a scale suffix glued to digits ("9.6bn", "5m", "20k").
std::optional<int> scale_suffix(std::string_view s) {
  if (s == "k" || s == "thousand") return 3;
  if (s == "m" || s == "mn" || s == "million") return 6;
  if (s == "bn" || s == "billion") return 9;
  if (s == "tn" || s == "trillion") return 12;
  return std::nullopt;
}

bool is_ordinal_suffix(std::string_view s) {
  return s == "st" || s == "nd" || s == "rd" || s == "th";
}

bool is_unit(std::string_view w) {
  static const std::unordered_set<std::string_view> kUnits = {
      "km",      "kilometres", "kilometers", "kilometre", "kilometer",
      "metres",  "meters",     "metre",      "meter",     "miles",
      "mile",    "kg",         "kilograms",  "kilogrammes", "kilogram",
      "tonnes",  "tonne",      "tons",       "ton",       "grams",
      "gram",    "litres",     "liters",     "litre",     "liter",
      "gallons", "gallon",     "acres",      "acre",      "hectares",
      "hectare", "feet",       "foot",       "ft",        "inches",
      "inch",    "cm",         "mm",         "mph",       "kph",
      "degrees", "barrels",    "yards",      "yard",      "lb",
      "lbs",     "mw",         "gw",         "kw",        "sq",
  };
  return kUnits.count(w) > 0;
}

bool is_currency_word(std::string_view w) {
  static const std::unordered_set<std::string_view> kWords = {
      "dollars", "dollar", "pounds", "pound", "euros", "euro", "yen",
      "pence",   "cents",  "rupees", "yuan",  "francs", "roubles",
  };
  return kWords.count(w) > 0;
}

bool is_iso_currency(std::u32string_view w) {
  static const std::unordered_set<std::u32string_view> kCodes = {
      U"USD", U"GBP", U"EUR", U"JPY", U"CNY", U"CHF",
      U"AUD", U"CAD", U"INR", U"HKD", U"NZD", U"RUB",
  };
  return kCodes.count(w) > 0;
}

bool is_currency_prefix(std::u32string_view w) {
  return w == U"US" || w == U"A" || w == U"C" || w == U"HK" || w == U"NZ" ||
         w == U"S";
}

std::optional<int> month_number(std::string_view folded) {
  static const std::unordered_map<std::string_view, int> kMonths = {
      {"january", 1},   {"february", 2}, {"march", 3},    {"april", 4},
      {"may", 5},       {"june", 6},     {"july", 7},     {"august", 8},
      {"september", 9}, {"october", 10}, {"november", 11}, {"december", 12},
      {"jan", 1},       {"feb", 2},      {"mar", 3},      {"apr", 4},
      {"jun", 6},       {"jul", 7},      {"aug", 8},      {"sep", 9},
      {"sept", 9},      {"oct", 10},     {"nov", 11},     {"dec", 12},
  };
  auto it = kMonths.find(folded);
  if (it == kMonths.end()) return std::nullopt;
  return it->second;
}

std::optional<int> weekday_number(std::string_view folded) {
  static const std::unordered_map<std::string_view, int> kDays = {
      {"monday", 1}, {"tuesday", 2},  {"wednesday", 3}, {"thursday", 4},
      {"friday", 5}, {"saturday", 6}, {"sunday", 7},
  };
  auto it = kDays.find(folded);
  if (it == kDays.end()) return std::nullopt;
  return it->second;
}

// Split a word token into a leading numeric part ("9.6", "1,000") and an
// alphabetic suffix ("bn"). Returns nullopt if the token does not start with
// a digit or mixes letters back into digits.
struct NumericToken {
  std::string digits;  // with separators
  std::string suffix;  // case-folded
};

std::optional<NumericToken> split_numeric(std::u32string_view word) {
  if (word.empty() || !text::is_digit(word.front())) return std::nullopt;
  std::size_t i = 0;
  while (i < word.size() &&
         (text::is_digit(word[i]) || word[i] == U'.' || word[i] == U',')) {
    ++i;
  }
  for (std::size_t k = i; k < word.size(); ++k) {
    if (!text::is_alpha(word[k])) return std::nullopt;
  }
  NumericToken out;
  out.digits = text::to_utf8(word.substr(0, i));
  out.suffix = text::to_utf8(text::fold_case(word.substr(i)));
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

// Decimal string canonicalization: separators dropped, scaled by 10^exp,
// leading and trailing zeros trimmed. nullopt for malformed input.
std::optional<std::string> canonical_decimal(std::string_view raw, int exp) {
  std::string int_part;
  std::string frac_part;
  bool seen_point = false;
  for (char c : raw) {
    if (c == ',') continue;
    if (c == '.') {
      if (seen_point) return std::nullopt;
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') return std::nullopt;
    (seen_point ? frac_part : int_part).push_back(c);
  }
  if (int_part.empty() && frac_part.empty()) return std::nullopt;
  for (int k = 0; k < exp; ++k) {
    if (!frac_part.empty()) {
      int_part.push_back(frac_part.front());
      frac_part.erase(frac_part.begin());
    } else {
      int_part.push_back('0');
    }
  }
  const auto nz = int_part.find_first_not_of('0');
  int_part = nz == std::string::npos ? "0" : int_part.substr(nz);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();
  return frac_part.empty() ? int_part : int_part + "." + frac_part;
}

std::string ordinal_of(int n) {
  const int mod100 = n % 100;
  const int mod10 = n % 10;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    if (mod10 == 1) suffix = "st";
    if (mod10 == 2) suffix = "nd";
    if (mod10 == 3) suffix = "rd";
  }
  return std::to_string(n) + suffix;
}

// ---------------------------------------------------------------------------
// Normalization.

bool trims(char32_t c) {
  return !text::is_word_char(c) && !text::is_currency_symbol(c) && c != U'%';
}

std::u32string collapse_spaces(std::u32string_view s) {
  std::u32string out;
  bool pending = false;
  for (char32_t c : s) {
    if (text::is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::u32string trim_edges(std::u32string s) {
  std::size_t b = 0;
  while (b < s.size() && (trims(s[b]) || text::is_space(s[b]))) ++b;
  std::size_t e = s.size();
  while (e > b && (trims(s[e - 1]) || text::is_space(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool canonicalizes_numbers(EntityLabel label) {
  switch (label) {
    case EntityLabel::kMoney:
    case EntityLabel::kPercent:
    case EntityLabel::kQuantity:
    case EntityLabel::kCardinal:
    case EntityLabel::kOrdinal:
      return true;
    default:
      return false;
  }
}

// Rewrites numbers inside an already case-folded, space-collapsed string.
std::u32string canonicalize_numbers(std::u32string_view s, EntityLabel label) {
  const std::vector<Token> tokens = text::tokenize(s);
  std::u32string out;
  std::size_t copied = 0;  // offset in s up to which input is consumed

  auto emit_gap = [&](std::size_t upto) {
    if (upto > copied) out.append(s.substr(copied, upto - copied));
    copied = std::max(copied, upto);
  };
  auto word_at = [&](std::size_t k) -> std::string {
    if (k >= tokens.size() || tokens[k].kind != TokenKind::kWord) return {};
    return text::to_utf8(tokens[k].view);
  };

  // Appends '%' glued to a preceding number: "5 per cent" -> "5%".
  auto emit_percent = [&](std::size_t from, std::size_t to) {
    emit_gap(from);
    if (out.size() >= 2 && out.back() == U' ' &&
        text::is_digit(out[out.size() - 2])) {
      out.pop_back();
    }
    out.push_back(U'%');
    copied = to;
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& tok = tokens[i];
    if (tok.kind != TokenKind::kWord) {
      if (label == EntityLabel::kPercent && tok.view == U"%") {
        emit_percent(tok.start, tok.end);
      } else if (text::is_currency_symbol(tok.view.front()) &&
                 i + 1 < tokens.size() &&
                 tokens[i + 1].kind == TokenKind::kWord &&
                 text::is_digit(tokens[i + 1].view.front()) &&
                 tokens[i + 1].start > tok.end) {
        // "$ 5" -> "$5"
        emit_gap(tok.start);
        out.append(tok.view);
        copied = tokens[i + 1].start;
      }
      continue;
    }
    const std::string word = text::to_utf8(tok.view);

    if (label == EntityLabel::kOrdinal) {
      auto it = ordinal_words().find(word);
      if (it != ordinal_words().end()) {
        emit_gap(tok.start);
        out.append(text::to_u32(ordinal_of(it->second)));
        copied = tok.end;
      }
      continue;
    }

    if (label == EntityLabel::kPercent) {
      if (word == "percent") {
        emit_percent(tok.start, tok.end);
        continue;
      }
      if (word == "per" && word_at(i + 1) == "cent") {
        emit_percent(tok.start, tokens[i + 1].end);
        ++i;
        continue;
      }
    }

    std::optional<std::string> value;
    std::string kept_suffix;
    std::size_t last = i;
    if (auto cw = cardinal_words().find(word); cw != cardinal_words().end()) {
      int n = cw->second;
      // "twenty-five"
      if (n >= 20 && n % 10 == 0 && i + 2 < tokens.size() &&
          tokens[i + 1].view == U"-" && tokens[i + 1].start == tok.end &&
          tokens[i + 2].start == tokens[i + 1].end) {
        auto unit = cardinal_words().find(word_at(i + 2));
        if (unit != cardinal_words().end() && unit->second >= 1 &&
            unit->second <= 9) {
          n += unit->second;
          last = i + 2;
        }
      }
      value = std::to_string(n);
    } else if (auto num = split_numeric(tok.view)) {
      int exp = 0;
      if (auto sc = scale_suffix(num->suffix)) {
        exp = *sc;
      } else {
        kept_suffix = num->suffix;
      }
      value = canonical_decimal(num->digits, exp);
      if (!value) continue;
    } else {
      continue;
    }
    // Trailing free-standing scale words: "3 million", "two hundred".
    if (kept_suffix.empty()) {
      int exp = 0;
      while (last + 1 < tokens.size()) {
        auto sc = scale_word(word_at(last + 1));
        if (!sc) break;
        exp += *sc;
        ++last;
      }
      if (exp > 0) value = canonical_decimal(*value, exp);
    }
    emit_gap(tok.start);
    out.append(text::to_u32(*value + kept_suffix));
    copied = tokens[last].end;
    i = last;
  }
  emit_gap(s.size());
  return out;
}

std::u32string normalize_once(std::u32string s, EntityLabel label) {
  s = trim_edges(collapse_spaces(s));
  static const std::u32string kArticle = U"the ";
  if (s.size() > kArticle.size() && s.compare(0, kArticle.size(), kArticle) == 0) {
    s = s.substr(kArticle.size());
  }
  if (canonicalizes_numbers(label)) s = canonicalize_numbers(s, label);
  return trim_edges(collapse_spaces(s));
}

// ---------------------------------------------------------------------------
// Recognition.

enum Precedence : int {
  kMoneyRank = 0,
  kPercentRank,
  kDateRank,
  kTimeRank,
  kQuantityRank,
  kOrdinalRank,
  kCardinalRank,
  kGazetteerRank,  // + gazetteer index
};

struct Match {
  std::size_t start;  // scalar offsets
  std::size_t end;
  EntityLabel label;
  int rank;
  bool from_rule;
};

class RuleMatcher {
 public:
  RuleMatcher(std::u32string_view text, const std::vector<Token>& tokens)
      : text_(text), tokens_(tokens) {
    folded_.reserve(tokens.size());
    for (const Token& t : tokens) {
      folded_.push_back(text::to_utf8(text::fold_case(t.view)));
    }
  }

  void collect(std::vector<Match>& out) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      add(out, i, match_money(i), EntityLabel::kMoney, kMoneyRank);
      add(out, i, match_percent(i), EntityLabel::kPercent, kPercentRank);
      add(out, i, match_date(i), EntityLabel::kDate, kDateRank);
      add(out, i, match_time(i), EntityLabel::kTime, kTimeRank);
      add(out, i, match_quantity(i), EntityLabel::kQuantity, kQuantityRank);
      add(out, i, match_ordinal(i), EntityLabel::kOrdinal, kOrdinalRank);
      add(out, i, match_number(i), EntityLabel::kCardinal, kCardinalRank);
    }
  }

 private:
  using End = std::optional<std::size_t>;  // exclusive token index

  void add(std::vector<Match>& out, std::size_t begin, End end,
           EntityLabel label, int rank) const {
    if (!end) return;
    out.push_back({tokens_[begin].start, tokens_[*end - 1].end, label, rank,
                   true});
  }

  bool is_word(std::size_t i) const {
    return i < tokens_.size() && tokens_[i].kind == TokenKind::kWord;
  }
  bool is_punct(std::size_t i, char32_t c) const {
    return i < tokens_.size() && tokens_[i].kind == TokenKind::kPunct &&
           tokens_[i].view.front() == c;
  }
  bool adjacent(std::size_t i) const {  // token i touches token i + 1
    return i + 1 < tokens_.size() && tokens_[i].end == tokens_[i + 1].start;
  }
  const std::string& low(std::size_t i) const { return folded_[i]; }

  std::optional<NumericToken> numeric(std::size_t i) const {
    if (!is_word(i)) return std::nullopt;
    return split_numeric(tokens_[i].view);
  }

  std::optional<long long> small_integer(std::size_t i) const {
    auto num = numeric(i);
    if (!num || !num->suffix.empty() || !all_digits(num->digits) ||
        num->digits.size() > 4) {
      return std::nullopt;
    }
    return std::stoll(num->digits);
  }

  bool is_year(std::size_t i) const {
    auto num = numeric(i);
    if (!num || !num->suffix.empty() || num->digits.size() != 4 ||
        !all_digits(num->digits)) {
      return false;
    }
    const int y = std::stoi(num->digits);
    return y >= 1000 && y <= 2999;
  }

  bool is_day(std::size_t i) const {
    auto num = numeric(i);
    if (!num || !all_digits(num->digits) || num->digits.size() > 2) return false;
    if (!num->suffix.empty() && !is_ordinal_suffix(num->suffix)) return false;
    const int d = std::stoi(num->digits);
    return d >= 1 && d <= 31;
  }

  bool is_month(std::size_t i) const {
    return is_word(i) && text::is_capitalized(tokens_[i].view) &&
           month_number(low(i)).has_value();
  }

  bool is_cardinal_word(std::size_t i) const {
    return is_word(i) && cardinal_words().count(low(i)) > 0;
  }

  // A number: numeric token (optionally with a scale suffix) or a run of
  // number words, followed by any free-standing scale words.
  End number_phrase(std::size_t i) const {
    std::size_t end = i;
    if (auto num = numeric(i)) {
      if (!num->suffix.empty() && !scale_suffix(num->suffix)) return std::nullopt;
      end = i + 1;
    } else if (is_cardinal_word(i)) {
      end = i + 1;
      while (true) {
        if (is_cardinal_word(end) || (is_word(end) && scale_word(low(end)) &&
                                      !numeric(end))) {
          ++end;
        } else if (is_punct(end, U'-') && adjacent(end - 1) && adjacent(end) &&
                   is_cardinal_word(end + 1)) {
          end += 2;
        } else {
          break;
        }
      }
      return end;
    } else {
      return std::nullopt;
    }
    while (is_word(end) && scale_word(low(end))) ++end;
    return end;
  }

  End match_money(std::size_t i) const {
    std::size_t sym = i;
    if (is_word(i) && is_currency_prefix(tokens_[i].view) && adjacent(i)) {
      sym = i + 1;
    }
    if (sym < tokens_.size() && tokens_[sym].kind == TokenKind::kPunct &&
        text::is_currency_symbol(tokens_[sym].view.front()) && adjacent(sym) &&
        numeric(sym + 1)) {
      if (End e = number_phrase(sym + 1)) return e;
    }
    if (is_word(i) && is_iso_currency(tokens_[i].view) && numeric(i + 1)) {
      if (End e = number_phrase(i + 1)) return e;
    }
    if (End e = number_phrase(i); e && is_word(*e) && is_currency_word(low(*e))) {
      return *e + 1;
    }
    return std::nullopt;
  }

  End match_percent(std::size_t i) const {
    End e = number_phrase(i);
    if (!e) return std::nullopt;
    if (is_punct(*e, U'%')) return *e + 1;
    if (is_word(*e) && low(*e) == "percent") return *e + 1;
    if (is_word(*e) && low(*e) == "per" && is_word(*e + 1) &&
        low(*e + 1) == "cent") {
      return *e + 2;
    }
    return std::nullopt;
  }

  End match_date(std::size_t i) const {
    if (is_day(i) && is_month(i + 1)) {
      return is_year(i + 2) ? i + 3 : i + 2;
    }
    if (is_month(i)) {
      if (is_day(i + 1)) {
        if (is_punct(i + 2, U',') && is_year(i + 3)) return i + 4;
        if (is_year(i + 2)) return i + 3;
        return i + 2;
      }
      if (is_year(i + 1)) return i + 2;
      // A bare month name; "May" and abbreviations are too ambiguous alone.
      if (low(i) != "may" && low(i).size() >= 4 && low(i) != "sept") {
        return i + 1;
      }
      return std::nullopt;
    }
    if (is_word(i) && text::is_capitalized(tokens_[i].view) &&
        weekday_number(low(i))) {
      return i + 1;
    }
    if (is_year(i)) return i + 1;
    if (auto num = numeric(i); num && num->suffix == "s" &&
                               num->digits.size() == 4 &&
                               all_digits(num->digits)) {
      return i + 1;  // decades: "1990s"
    }
    return std::nullopt;
  }

  End match_time(std::size_t i) const {
    auto is_meridiem = [&](std::size_t k) {
      return is_word(k) && (low(k) == "am" || low(k) == "pm" ||
                            low(k) == "gmt" || low(k) == "bst");
    };
    if (auto h = small_integer(i); h && *h <= 24 && is_punct(i + 1, U':') &&
                                   adjacent(i) && adjacent(i + 1)) {
      auto mins = numeric(i + 2);
      if (mins && mins->digits.size() == 2 && all_digits(mins->digits) &&
          (mins->suffix.empty() || mins->suffix == "am" ||
           mins->suffix == "pm")) {
        return is_meridiem(i + 3) ? i + 4 : i + 3;
      }
    }
    if (auto num = numeric(i); num && all_digits(num->digits) &&
                               num->digits.size() <= 2 &&
                               (num->suffix == "am" || num->suffix == "pm")) {
      return i + 1;
    }
    if (auto h = small_integer(i); h && *h >= 1 && *h <= 12 && is_word(i + 1) &&
                                   (low(i + 1) == "am" || low(i + 1) == "pm")) {
      return i + 2;
    }
    if (is_word(i) && (low(i) == "noon" || low(i) == "midnight")) return i + 1;
    return std::nullopt;
  }

  End match_quantity(std::size_t i) const {
    if (auto num = numeric(i); num && is_unit(num->suffix)) return i + 1;
    End e = number_phrase(i);
    if (e && is_word(*e) && is_unit(low(*e))) return *e + 1;
    return std::nullopt;
  }

  End match_ordinal(std::size_t i) const {
    if (auto num = numeric(i);
        num && all_digits(num->digits) && is_ordinal_suffix(num->suffix)) {
      return i + 1;
    }
    if (is_word(i) && ordinal_words().count(low(i))) return i + 1;
    return std::nullopt;
  }

  End match_number(std::size_t i) const { return number_phrase(i); }

  std::u32string_view text_;
  const std::vector<Token>& tokens_;
  std::vector<std::string> folded_;
};

void collect_gazetteer_matches(std::u32string_view text,
                               const std::vector<Token>& tokens,
                               std::span<const Gazetteer> gazetteers,
                               std::vector<Match>& out) {
  std::size_t max_len = 0;
  for (const auto& g : gazetteers) max_len = std::max(max_len, g.max_tokens());
  if (max_len == 0) return;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::kWord) continue;
    if (text::fold_case(tokens[i].view) == U"the") continue;
    for (std::size_t j = i; j < tokens.size() && j - i < max_len; ++j) {
      if (tokens[j].kind != TokenKind::kWord) continue;
      const std::string surface =
          text::slice(text, tokens[i].start, tokens[j].end);
      for (std::size_t g = 0; g < gazetteers.size(); ++g) {
        if (j - i >= gazetteers[g].max_tokens()) continue;
        if (gazetteers[g].contains(normalize(surface, gazetteers[g].label()))) {
          out.push_back({tokens[i].start, tokens[j].end, gazetteers[g].label(),
                         kGazetteerRank + static_cast<int>(g), false});
        }
      }
    }
  }
}

// Rule matches that sit strictly inside another rule match never surface.
std::vector<Match> drop_nested_rule_matches(std::vector<Match> matches) {
  std::vector<Match> kept;
  for (const Match& m : matches) {
    bool nested = false;
    if (m.from_rule) {
      for (const Match& other : matches) {
        if (!other.from_rule) continue;
        if (other.start <= m.start && m.end <= other.end &&
            (other.start != m.start || other.end != m.end)) {
          nested = true;
          break;
        }
      }
    }
    if (!nested) kept.push_back(m);
  }
  return kept;
}

}  // namespace

std::string_view label_name(EntityLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

std::optional<EntityLabel> parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == name) return static_cast<EntityLabel>(i);
  }
  return std::nullopt;
}

bool is_numeric_label(EntityLabel label) {
  switch (label) {
    case EntityLabel::kDate:
    case EntityLabel::kTime:
    case EntityLabel::kPercent:
    case EntityLabel::kMoney:
    case EntityLabel::kQuantity:
    case EntityLabel::kOrdinal:
    case EntityLabel::kCardinal:
      return true;
    default:
      return false;
  }
}

std::string normalize(std::string_view surface, EntityLabel label) {
  std::u32string current = text::fold_case(text::to_u32(surface));
  // Each pass only shortens the string or replaces words by digits, so the
  // fixed point is reached quickly; the cap is a guard.
  for (int pass = 0; pass < 256; ++pass) {
    std::u32string next = normalize_once(current, label);
    if (next == current) break;
    current = std::move(next);
  }
  return text::to_utf8(current);
}

std::vector<std::string> canonical_values(std::string_view normalized,
                                          EntityLabel label) {
  const std::u32string s = text::to_u32(normalized);
  const std::vector<Token> tokens = text::tokenize(s);
  std::vector<std::string> values;
  const bool dateish = label == EntityLabel::kDate || label == EntityLabel::kTime;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::kWord) continue;
    const std::string word = text::to_utf8(text::fold_case(tokens[i].view));
    if (dateish) {
      if (auto m = month_number(word)) {
        values.push_back("month:" + std::to_string(*m));
        continue;
      }
      if (auto d = weekday_number(word)) {
        values.push_back("weekday:" + std::to_string(*d));
        continue;
      }
      if (auto cw = cardinal_words().find(word); cw != cardinal_words().end()) {
        values.push_back(std::to_string(cw->second));
        continue;
      }
    }
    if (label == EntityLabel::kOrdinal) {
      if (auto ow = ordinal_words().find(word); ow != ordinal_words().end()) {
        values.push_back(ordinal_of(ow->second));
        continue;
      }
    }
    auto num = split_numeric(tokens[i].view);
    if (!num) continue;
    std::string suffix = num->suffix;
    int exp = 0;
    if (auto sc = scale_suffix(suffix); sc && !dateish) {
      exp = *sc;
      suffix.clear();
    }
    if (dateish && (is_ordinal_suffix(suffix) || suffix == "s")) suffix.clear();
    auto value = canonical_decimal(num->digits, exp);
    if (!value) continue;
    std::string atom = *value + suffix;
    if (i > 0 && tokens[i - 1].kind == TokenKind::kPunct &&
        tokens[i - 1].end == tokens[i].start &&
        text::is_currency_symbol(tokens[i - 1].view.front())) {
      atom = text::to_utf8(tokens[i - 1].view) + atom;
    }
    if (i + 1 < tokens.size() && tokens[i + 1].view == U"%") atom += "%";
    values.push_back(std::move(atom));
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

std::vector<std::string> name_tokens(std::string_view normalized) {
  std::vector<std::string> tokens = text::word_tokens(normalized);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

Gazetteer::Gazetteer(EntityLabel label, std::span<const std::string> names)
    : label_(label) {
  for (const std::string& name : names) {
    std::string norm = normalize(name, label);
    if (norm.empty()) continue;
    const std::u32string wide = text::to_u32(name);
    const std::vector<Token> tokens = text::tokenize(wide);
    std::size_t first = 0;
    while (first < tokens.size() && (tokens[first].kind != TokenKind::kWord ||
                                     text::fold_case(tokens[first].view) == U"the")) {
      ++first;
    }
    max_tokens_ = std::max(max_tokens_, tokens.size() - first);
    entries_.insert(std::move(norm));
  }
}

std::vector<Gazetteer> load_gazetteers(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kFileUnreadable, "ner",
                "cannot read gazetteer " + path.string());
  }
  std::vector<EntityLabel> order;
  std::map<EntityLabel, std::vector<std::string>> names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    auto label = tab == std::string::npos
                     ? std::nullopt
                     : parse_label(std::string_view(line).substr(0, tab));
    if (!label) {
      throw Error(ErrorCode::kMalformedRecord, "ner",
                  path.string() + ":" + std::to_string(line_no) +
                      ": expected LABEL<TAB>name");
    }
    if (!names.count(*label)) order.push_back(*label);
    names[*label].push_back(line.substr(tab + 1));
  }
  std::vector<Gazetteer> out;
  for (EntityLabel label : order) out.emplace_back(label, names[label]);
  return out;
}

std::vector<EntityMention> recognize(std::string_view utf8,
                                     std::span<const Gazetteer> gazetteers) {
  const std::u32string text = text::to_u32(utf8);
  const std::vector<Token> tokens = text::tokenize(text);

  std::vector<Match> matches;
  RuleMatcher(text, tokens).collect(matches);
  matches = drop_nested_rule_matches(std::move(matches));
  collect_gazetteer_matches(text, tokens, gazetteers, matches);

  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    const auto la = a.end - a.start;
    const auto lb = b.end - b.start;
    if (la != lb) return la > lb;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.start < b.start;
  });

  std::vector<bool> taken(text.size(), false);
  std::vector<EntityMention> mentions;
  for (const Match& m : matches) {
    if (std::any_of(taken.begin() + m.start, taken.begin() + m.end,
                    [](bool t) { return t; })) {
      continue;
    }
    std::fill(taken.begin() + m.start, taken.begin() + m.end, true);
    EntityMention mention;
    mention.start = m.start;
    mention.end = m.end;
    mention.surface = text::slice(text, m.start, m.end);
    mention.label = m.label;
    mention.normalized = normalize(mention.surface, m.label);
    mentions.push_back(std::move(mention));
  }
  std::sort(mentions.begin(), mentions.end(),
            [](const EntityMention& a, const EntityMention& b) {
              return a.start < b.start;
            });
  return mentions;
}

bool mention_is_valid(const EntityMention& mention, std::u32string_view text) {
  return mention.start < mention.end && mention.end <= text.size() &&
         mention.surface == text::slice(text, mention.start, mention.end);
}

}  // namespace hallufix
