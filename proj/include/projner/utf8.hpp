#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 helpers. All character offsets in the library count Unicode scalar
// values, never bytes.
namespace projner::utf8 {

// Throws ParseError on malformed input.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

std::size_t length(std::string_view text);

// Substring [start, end) in scalar-value offsets.
std::string substr(std::string_view text, std::size_t start, std::size_t end);

// Byte offset -> scalar offset for a valid UTF-8 string.
std::size_t scalar_offset(std::string_view text, std::size_t byte_offset);

bool is_whitespace(char32_t cp);
// General categories P* plus Sc (currency symbols).
bool is_punctuation(char32_t cp);
bool is_upper(char32_t cp);
bool is_digit(char32_t cp);

}  // namespace projner::utf8
