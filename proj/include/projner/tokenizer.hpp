#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace projner {

struct Token {
  std::string surface;
  std::size_t start = 0;  // inclusive, scalar values
  std::size_t end = 0;    // exclusive

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenizedSentence {
  std::string text;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> surfaces() const;

  friend bool operator==(const TokenizedSentence&, const TokenizedSentence&) = default;
};

// Inclusive token index range.
struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;

  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

// Half-open character range in scalar values.
struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const CharRange&, const CharRange&) = default;
};

struct TokenizerOptions {
  // Replaces the built-in punctuation class when set.
  std::optional<std::u32string> punctuation;
};

// Whitespace split, then punctuation is detached as single-character tokens
// unless both neighbours inside the chunk are non-punctuation characters
// ("2.5", "z.B" and "don't" stay whole; "end." and "(oral)" split).
class Tokenizer {
 public:
  Tokenizer() = default;
  explicit Tokenizer(TokenizerOptions options) : options_(std::move(options)) {}

  TokenizedSentence tokenize(std::string_view text) const;

 private:
  bool is_punct(char32_t cp) const;

  TokenizerOptions options_;
};

TokenizedSentence tokenize(std::string_view text);

// Minimal token range covering every token that overlaps [start, end);
// nullopt when only whitespace is covered. Throws RangeError on bad bounds.
std::optional<TokenRange> char_span_to_token_span(const TokenizedSentence& ts, std::size_t start,
                                                  std::size_t end);

// Throws RangeError unless first <= last < token count.
CharRange token_span_to_char_span(const TokenizedSentence& ts, std::size_t first, std::size_t last);

}  // namespace projner
