#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace projner {

// A labelled character span; offsets count Unicode scalar values.
struct EntitySpan {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct StandoffDocument {
  std::string doc_id;
  std::string text;
  std::vector<EntitySpan> spans;  // may overlap
};

struct Sentence {
  std::string doc_id;
  std::size_t doc_offset = 0;
  std::string text;
  std::vector<EntitySpan> spans;  // sentence-local offsets

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Parses brat-style `<id>\t<Label> <start> <end>[;<start> <end>...]\t<surface>`
// lines. Only text-bound (`T`) lines are read; relation, attribute and note
// lines are skipped. Discontinuous spans yield one EntitySpan per fragment.
// Throws ParseError (with line number), RangeError, or IntegrityError.
StandoffDocument parse_standoff(std::string_view text_content, std::string_view ann_content,
                                std::string doc_id = {});

void check_span_integrity(std::string_view text, const std::vector<EntitySpan>& spans);

struct SegmenterOptions {
  std::vector<std::string> abbreviations{"Dr", "Mr", "Mrs", "Ms", "vs", "e.g", "i.e", "St"};
};

// Rule-based sentence splitting. A boundary follows `.`, `!` or `?` when the
// next non-space character is an uppercase letter or a digit, except after a
// listed abbreviation or for a digit-adjacent period. Boundaries crossed by an
// entity span are suppressed.
std::vector<Sentence> segment_sentences(const StandoffDocument& doc, const SegmenterOptions& options = {});

enum class PlaceholderKind { PersonName, Date, Address, IdNumber, Other };

std::string_view to_string(PlaceholderKind kind);
PlaceholderKind placeholder_kind_for(std::string_view placeholder);

inline constexpr std::string_view kDefaultPlaceholderPattern = R"(\[\*\*[^\]]*?\*\*\])";

struct SyntheticValueSpec {
  std::uint64_t seed = 0;
  std::string pattern{kDefaultPlaceholderPattern};
  std::map<PlaceholderKind, std::vector<std::string>> pools = default_pools();

  static std::map<PlaceholderKind, std::vector<std::string>> default_pools();
};

// Replacement for the placeholder with the given occurrence ordinal.
std::string synthetic_value(const SyntheticValueSpec& spec, PlaceholderKind kind, std::size_t ordinal);

// Replaces every placeholder in `s` and shifts span offsets. Throws
// IntegrityError when a placeholder overlaps an entity span.
Sentence synthesize_placeholders(const Sentence& s, const SyntheticValueSpec& spec);

// Per-sentence generator seed, so that sentences of one corpus draw
// independent values from a single configured seed.
std::uint64_t derive_sentence_seed(std::uint64_t seed, std::string_view doc_id, std::size_t doc_offset);

}  // namespace projner
