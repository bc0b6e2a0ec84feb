#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Unicode-scalar text helpers shared by recognition, substitution and ROUGE.
// All offsets in the library are indices into the UTF-32 form of a text.
namespace hallufix::text {

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

// Number of Unicode scalars in a UTF-8 string.
std::size_t scalar_length(std::string_view utf8);

// Slice [start, end) by scalar index, returned as UTF-8.
std::string slice(std::u32string_view text, std::size_t start, std::size_t end);

bool is_space(char32_t c);
bool is_digit(char32_t c);
bool is_alpha(char32_t c);
bool is_currency_symbol(char32_t c);
bool is_word_char(char32_t c);

char32_t fold_case(char32_t c);
std::u32string fold_case(std::u32string_view text);
std::string fold_case(std::string_view utf8);
bool is_capitalized(std::u32string_view word);

enum class TokenKind { kWord, kPunct };

struct Token {
  std::size_t start = 0;
  std::size_t end = 0;
  TokenKind kind = TokenKind::kWord;
  std::u32string_view view;  // into the tokenized buffer
};

// Word tokens are maximal runs of letters/digits; '.' and ',' stay inside a
// word when flanked by digits ("9.6bn", "1,000"). Every other non-space
// character is a single punctuation token.
std::vector<Token> tokenize(std::u32string_view text);

// Case-folded word tokens only.
std::vector<std::string> word_tokens(std::string_view utf8);

bool is_stopword(std::string_view folded);

// Start offsets of every non-overlapping occurrence of needle in haystack.
std::vector<std::size_t> find_all(std::u32string_view haystack,
                                  std::u32string_view needle);

}  // namespace hallufix::text
