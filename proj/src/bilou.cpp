#include "projner/bilou.hpp"

#include <algorithm>

#include "projner/error.hpp"

namespace projner {

namespace {

constexpr char kTagLetters[] = {'B', 'I', 'L', 'U'};

struct ParsedAction {
  BilouTag tag;
  std::string label;
};

ParsedAction parse_action(std::string_view name, std::size_t position) {
  if (name == "O") return {BilouTag::Outside, {}};
  if (name.size() < 3 || name[1] != '-') {
    throw StructureError("malformed action '" + std::string(name) + "' at position " + std::to_string(position),
                         position);
  }
  const auto it = std::find(std::begin(kTagLetters), std::end(kTagLetters), name[0]);
  if (it == std::end(kTagLetters)) {
    throw StructureError("malformed action '" + std::string(name) + "' at position " + std::to_string(position),
                         position);
  }
  return {static_cast<BilouTag>(it - std::begin(kTagLetters)), std::string(name.substr(2))};
}

void check_spans(std::size_t token_count, std::vector<LabeledRange> spans) {
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 0; k < spans.size(); ++k) {
    if (spans[k].first > spans[k].last || spans[k].last >= token_count) {
      throw PreconditionError("span out of range for " + std::to_string(token_count) + " tokens");
    }
    if (k > 0 && spans[k].first <= spans[k - 1].last) throw PreconditionError("overlapping spans");
  }
}

}  // namespace

TagInventory::TagInventory(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

std::size_t TagInventory::action(BilouTag tag, std::size_t label) const {
  if (tag == BilouTag::Outside) return outside();
  return 1 + 4 * label + static_cast<std::size_t>(tag);
}

std::optional<std::size_t> TagInventory::label_index(std::string_view label) const {
  const auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

BilouTag TagInventory::tag_of(std::size_t action) const {
  if (action == outside()) return BilouTag::Outside;
  return static_cast<BilouTag>((action - 1) % 4);
}

std::size_t TagInventory::label_of(std::size_t action) const { return (action - 1) / 4; }

std::string TagInventory::name(std::size_t action) const {
  if (action == outside()) return "O";
  return std::string(1, kTagLetters[(action - 1) % 4]) + "-" + labels_.at(label_of(action));
}

std::size_t TagInventory::parse(std::string_view name) const {
  if (name == "O") return outside();
  if (name.size() >= 3 && name[1] == '-') {
    const auto it = std::find(std::begin(kTagLetters), std::end(kTagLetters), name[0]);
    const auto label = label_index(name.substr(2));
    if (it != std::end(kTagLetters) && label) {
      return action(static_cast<BilouTag>(it - std::begin(kTagLetters)), *label);
    }
  }
  throw ParseError("unknown action '" + std::string(name) + "'");
}

std::vector<std::string> encode_bilou(std::size_t token_count, const std::vector<LabeledRange>& spans) {
  check_spans(token_count, spans);
  std::vector<std::string> out(token_count, "O");
  for (const auto& s : spans) {
    if (s.first == s.last) {
      out[s.first] = "U-" + s.label;
      continue;
    }
    out[s.first] = "B-" + s.label;
    for (std::size_t k = s.first + 1; k < s.last; ++k) out[k] = "I-" + s.label;
    out[s.last] = "L-" + s.label;
  }
  return out;
}

std::vector<LabeledRange> decode_bilou(const std::vector<std::string>& actions) {
  std::vector<LabeledRange> spans;
  std::optional<LabeledRange> open;
  for (std::size_t pos = 0; pos < actions.size(); ++pos) {
    const auto a = parse_action(actions[pos], pos);
    const auto fail = [&] {
      throw StructureError("ungrammatical action '" + actions[pos] + "' at position " + std::to_string(pos), pos);
    };
    if (open) {
      if (a.label != open->label || (a.tag != BilouTag::Inside && a.tag != BilouTag::Last)) fail();
      if (a.tag == BilouTag::Last) {
        open->last = pos;
        spans.push_back(std::move(*open));
        open.reset();
      }
      continue;
    }
    switch (a.tag) {
      case BilouTag::Outside: break;
      case BilouTag::Unit: spans.push_back(LabeledRange{pos, pos, a.label}); break;
      case BilouTag::Begin: open = LabeledRange{pos, pos, a.label}; break;
      default: fail();
    }
  }
  if (open) {
    throw StructureError("entity '" + open->label + "' left open at end of sequence (position " +
                             std::to_string(actions.size()) + ")",
                         actions.size());
  }
  return spans;
}

std::vector<std::size_t> encode_actions(std::size_t token_count, const std::vector<LabeledRange>& spans,
                                        const TagInventory& inventory) {
  std::vector<std::size_t> out;
  for (const auto& name : encode_bilou(token_count, spans)) out.push_back(inventory.parse(name));
  return out;
}

std::vector<LabeledRange> decode_actions(const std::vector<std::size_t>& actions, const TagInventory& inventory) {
  std::vector<std::string> names;
  names.reserve(actions.size());
  for (auto a : actions) names.push_back(inventory.name(a));
  return decode_bilou(names);
}

std::vector<bool> valid_actions(std::optional<std::size_t> previous, bool is_last_token,
                                const TagInventory& inventory) {
  std::vector<bool> mask(inventory.action_count(), false);
  const BilouTag prev_tag = previous ? inventory.tag_of(*previous) : BilouTag::Outside;
  if (prev_tag == BilouTag::Begin || prev_tag == BilouTag::Inside) {
    const std::size_t label = inventory.label_of(*previous);
    if (!is_last_token) mask[inventory.action(BilouTag::Inside, label)] = true;
    mask[inventory.action(BilouTag::Last, label)] = true;
    return mask;
  }
  mask[TagInventory::outside()] = true;
  for (std::size_t label = 0; label < inventory.labels().size(); ++label) {
    mask[inventory.action(BilouTag::Unit, label)] = true;
    if (!is_last_token) mask[inventory.action(BilouTag::Begin, label)] = true;
  }
  return mask;
}

}  // namespace projner
