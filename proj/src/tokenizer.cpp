#include "projner/tokenizer.hpp"

#include <algorithm>

#include "projner/error.hpp"
#include "projner/utf8.hpp"

namespace projner {

std::vector<std::string> TokenizedSentence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

bool Tokenizer::is_punct(char32_t cp) const {
  if (options_.punctuation) return options_.punctuation->find(cp) != std::u32string::npos;
  return utf8::is_punctuation(cp);
}

TokenizedSentence Tokenizer::tokenize(std::string_view text) const {
  TokenizedSentence out;
  out.text = std::string(text);
  const std::u32string chars = utf8::decode(text);

  auto emit = [&](std::size_t begin, std::size_t end) {
    out.tokens.push_back(Token{utf8::encode(std::u32string_view(chars).substr(begin, end - begin)), begin, end});
  };

  std::size_t i = 0;
  while (i < chars.size()) {
    if (utf8::is_whitespace(chars[i])) {
      ++i;
      continue;
    }
    std::size_t chunk_end = i;
    while (chunk_end < chars.size() && !utf8::is_whitespace(chars[chunk_end])) ++chunk_end;

    std::size_t run_start = i;
    for (std::size_t p = i; p < chunk_end; ++p) {
      if (!is_punct(chars[p])) continue;
      const bool flanked = p > i && p + 1 < chunk_end && !is_punct(chars[p - 1]) && !is_punct(chars[p + 1]);
      if (flanked) continue;
      if (run_start < p) emit(run_start, p);
      emit(p, p + 1);
      run_start = p + 1;
    }
    if (run_start < chunk_end) emit(run_start, chunk_end);
    i = chunk_end;
  }
  return out;
}

TokenizedSentence tokenize(std::string_view text) { return Tokenizer{}.tokenize(text); }

std::optional<TokenRange> char_span_to_token_span(const TokenizedSentence& ts, std::size_t start,
                                                  std::size_t end) {
  if (start >= end || end > utf8::length(ts.text)) {
    throw RangeError("character span [" + std::to_string(start) + ", " + std::to_string(end) +
                     ") out of range");
  }
  std::optional<TokenRange> range;
  for (std::size_t k = 0; k < ts.tokens.size(); ++k) {
    const auto& t = ts.tokens[k];
    if (t.end <= start) continue;
    if (t.start >= end) break;
    if (!range) range = TokenRange{k, k};
    range->last = k;
  }
  return range;
}

CharRange token_span_to_char_span(const TokenizedSentence& ts, std::size_t first, std::size_t last) {
  if (first > last || last >= ts.tokens.size()) {
    throw RangeError("token range (" + std::to_string(first) + ", " + std::to_string(last) +
                     ") out of range for " + std::to_string(ts.tokens.size()) + " tokens");
  }
  return CharRange{ts.tokens[first].start, ts.tokens[last].end};
}

}  // namespace projner
