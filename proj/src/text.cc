#include "hallufix/text.h"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace hallufix::text {

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) {
    const auto lead = static_cast<unsigned char>(utf8[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead >> 5) == 0x6) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead >> 4) == 0xE) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead >> 3) == 0x1E) {
      len = 4;
      cp = lead & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > utf8.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(utf8[i + k]);
      if ((cont >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::size_t scalar_length(std::string_view utf8) {
  std::size_t n = 0;
  for (char c : utf8) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string slice(std::u32string_view text, std::size_t start,
                  std::size_t end) {
  start = std::min(start, text.size());
  end = std::clamp(end, start, text.size());
  return to_utf8(text.substr(start, end - start));
}

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200B;
  }
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_currency_symbol(char32_t c) {
  return c == U'$' || c == 0xA2 || c == 0xA3 || c == 0xA5 ||
         (c >= 0x20A0 && c <= 0x20CF);
}

namespace {

bool is_symbol_block(char32_t c) {
  return (c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 ||
         (c >= 0x2010 && c <= 0x2BFF) || (c >= 0x3000 && c <= 0x303F) ||
         (c >= 0xFE10 && c <= 0xFE6F) || (c >= 0xFF01 && c <= 0xFF0F) ||
         (c >= 0xFF1A && c <= 0xFF20) || c == 0xFFFD;
}

}  // namespace

bool is_alpha(char32_t c) {
  if (c < 0x80) return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
  return !is_space(c) && !is_symbol_block(c);
}

bool is_word_char(char32_t c) { return is_digit(c) || is_alpha(c); }

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0xC0) return c;
  if (c <= 0xDE) return c == 0xD7 ? c : c + 32;
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

std::u32string fold_case(std::u32string_view text) {
  std::u32string out(text);
  for (auto& c : out) c = fold_case(c);
  return out;
}

std::string fold_case(std::string_view utf8) {
  return to_utf8(fold_case(to_u32(utf8)));
}

bool is_capitalized(std::u32string_view word) {
  return !word.empty() && is_alpha(word.front()) &&
         fold_case(word.front()) != word.front();
}

std::vector<Token> tokenize(std::u32string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char32_t c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (!is_word_char(c)) {
      tokens.push_back({i, i + 1, TokenKind::kPunct, text.substr(i, 1)});
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n) {
      if (is_word_char(text[j])) {
        ++j;
      } else if ((text[j] == U'.' || text[j] == U',') && j + 1 < n &&
                 is_digit(text[j - 1]) && is_digit(text[j + 1])) {
        j += 2;
      } else {
        break;
      }
    }
    tokens.push_back({i, j, TokenKind::kWord, text.substr(i, j - i)});
    i = j;
  }
  return tokens;
}

std::vector<std::string> word_tokens(std::string_view utf8) {
  const std::u32string folded = fold_case(to_u32(utf8));
  std::vector<std::string> out;
  for (const Token& t : tokenize(folded)) {
    if (t.kind == TokenKind::kWord) out.push_back(to_utf8(t.view));
  }
  return out;
}

bool is_stopword(std::string_view folded) {
  static const std::unordered_set<std::string_view> kStopwords = {
      "a",    "about", "after", "also", "an",   "and",   "are",  "as",
      "at",   "be",    "been",  "but",  "by",   "for",   "from", "had",
      "has",  "have",  "he",    "her",  "his",  "in",    "into", "is",
      "it",   "its",   "not",   "of",   "on",   "or",    "over", "s",
      "said", "she",   "than",  "that", "the",  "their", "they", "this",
      "to",   "was",   "were",  "which", "who", "will",  "with",
  };
  return kStopwords.count(folded) > 0;
}

std::vector<std::size_t> find_all(std::u32string_view haystack,
                                  std::u32string_view needle) {
  std::vector<std::size_t> hits;
  if (needle.empty()) return hits;
  std::size_t pos = haystack.find(needle);
  while (pos != std::u32string_view::npos) {
    hits.push_back(pos);
    pos = haystack.find(needle, pos + needle.size());
  }
  return hits;
}

}  // namespace hallufix::text
