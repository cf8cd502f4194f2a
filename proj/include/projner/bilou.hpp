#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace projner {

enum class BilouTag { Begin, Inside, Last, Unit, Outside };

struct LabeledRange {
  std::size_t first = 0;  // inclusive
  std::size_t last = 0;   // inclusive
  std::string label;

  friend bool operator==(const LabeledRange&, const LabeledRange&) = default;
};

// Actions are indexed O first, then B, I, L, U for each label in sorted
// order: index = 1 + 4 * label + tag.
class TagInventory {
 public:
  TagInventory() = default;
  // Labels are sorted and deduplicated.
  explicit TagInventory(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t action_count() const { return 4 * labels_.size() + 1; }

  static constexpr std::size_t outside() { return 0; }
  std::size_t action(BilouTag tag, std::size_t label) const;
  std::optional<std::size_t> label_index(std::string_view label) const;

  BilouTag tag_of(std::size_t action) const;
  std::size_t label_of(std::size_t action) const;  // undefined for O
  std::string name(std::size_t action) const;
  // Throws ParseError for unknown names.
  std::size_t parse(std::string_view name) const;

  friend bool operator==(const TagInventory&, const TagInventory&) = default;

 private:
  std::vector<std::string> labels_;
};

// Throws PreconditionError for overlapping or out-of-range spans.
std::vector<std::string> encode_bilou(std::size_t token_count, const std::vector<LabeledRange>& spans);

// Throws StructureError at the first offending position (the sequence length
// when an entity is left open).
std::vector<LabeledRange> decode_bilou(const std::vector<std::string>& actions);

std::vector<std::size_t> encode_actions(std::size_t token_count, const std::vector<LabeledRange>& spans,
                                        const TagInventory& inventory);
std::vector<LabeledRange> decode_actions(const std::vector<std::size_t>& actions, const TagInventory& inventory);

// Mask of actions allowed after `previous` (nullopt at sentence start).
std::vector<bool> valid_actions(std::optional<std::size_t> previous, bool is_last_token,
                                const TagInventory& inventory);

}  // namespace projner
