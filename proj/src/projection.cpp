#include "projner/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "projner/error.hpp"
#include "projner/random.hpp"

namespace projner {

TokenSpan make_token_span(const TokenizedSentence& ts, std::string label, std::size_t first, std::size_t last) {
  const CharRange chars = token_span_to_char_span(ts, first, last);
  return TokenSpan{std::move(label), first, last, chars.start, chars.end};
}

std::optional<TokenRange> project_annotation(const AlignmentLinks& alignment, TokenRange source,
                                             std::size_t target_token_count) {
  if (source.first > source.last) throw RangeError("inverted source token span");
  std::optional<TokenRange> image;
  for (const auto& link : alignment) {
    if (link.source < source.first || link.source > source.last) continue;
    if (link.target >= target_token_count) continue;
    if (!image) {
      image = TokenRange{link.target, link.target};
    } else {
      image->first = std::min(image->first, link.target);
      image->last = std::max(image->last, link.target);
    }
  }
  return image;
}

void ProjectionReport::merge(const ProjectionReport& other) {
  for (const auto& [label, t] : other.per_label) {
    auto& mine = per_label[label];
    mine.projected += t.projected;
    mine.dropped += t.dropped;
    mine.widened += t.widened;
    mine.widened_subword += t.widened_subword;
    mine.noncontiguous += t.noncontiguous;
  }
  sentences_total += other.sentences_total;
  sentences_kept += other.sentences_kept;
  spans_removed_by_label += other.spans_removed_by_label;
  spans_removed_by_overlap += other.spans_removed_by_overlap;
}

AnnotatedSentence project_sentence(const Sentence& source, const TokenizedSentence& source_tokens,
                                   const TokenizedSentence& target, const AlignmentLinks& alignment,
                                   ProjectionReport* report) {
  for (const auto& link : alignment) {
    if (link.source >= source_tokens.size() || link.target >= target.size()) {
      throw RangeError("alignment link " + std::to_string(link.source) + "-" + std::to_string(link.target) +
                       " outside a " + std::to_string(source_tokens.size()) + "x" + std::to_string(target.size()) +
                       " sentence pair");
    }
  }
  AnnotatedSentence out{target, {}};
  for (const auto& span : source.spans) {
    LabelTally tally;
    const auto src_range = char_span_to_token_span(source_tokens, span.start, span.end);
    std::optional<TokenRange> image;
    if (src_range) image = project_annotation(alignment, *src_range, target.size());
    if (!image) {
      tally.dropped = 1;
    } else {
      tally.projected = 1;
      const CharRange src_chars = token_span_to_char_span(source_tokens, src_range->first, src_range->last);
      if (src_chars.start != span.start || src_chars.end != span.end) tally.widened_subword = 1;
      std::set<std::size_t> hit;
      for (const auto& link : alignment) {
        if (link.source >= src_range->first && link.source <= src_range->last) hit.insert(link.target);
      }
      if (hit.size() != image->last - image->first + 1) tally.noncontiguous = 1;
      tally.widened = tally.widened_subword | tally.noncontiguous;
      out.spans.push_back(make_token_span(target, span.label, image->first, image->last));
    }
    if (report) {
      auto& t = report->per_label[span.label];
      t.projected += tally.projected;
      t.dropped += tally.dropped;
      t.widened += tally.widened;
      t.widened_subword += tally.widened_subword;
      t.noncontiguous += tally.noncontiguous;
    }
  }
  std::sort(out.spans.begin(), out.spans.end(), [](const TokenSpan& a, const TokenSpan& b) {
    return std::tie(a.first, a.last, a.label) < std::tie(b.first, b.last, b.label);
  });
  return out;
}

std::vector<TokenSpan> resolve_overlaps(std::vector<TokenSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const TokenSpan& a, const TokenSpan& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.first != b.first) return a.first < b.first;
    return a.label < b.label;
  });
  std::vector<TokenSpan> kept;
  for (auto& s : spans) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(),
                                      [&](const TokenSpan& k) { return s.first <= k.last && k.first <= s.last; });
    if (!overlaps) kept.push_back(std::move(s));
  }
  std::sort(kept.begin(), kept.end(), [](const TokenSpan& a, const TokenSpan& b) { return a.first < b.first; });
  return kept;
}

const std::set<std::string>& default_dropped_labels() {
  static const std::set<std::string> labels{"ADE", "Reason", "Route"};
  return labels;
}

std::vector<AnnotatedSentence> filter_dataset(std::vector<AnnotatedSentence> sentences,
                                              const std::set<std::string>& dropped_labels, bool drop_empty) {
  for (auto& s : sentences) {
    std::erase_if(s.spans, [&](const TokenSpan& span) { return dropped_labels.count(span.label) > 0; });
  }
  if (drop_empty) {
    std::erase_if(sentences, [](const AnnotatedSentence& s) { return s.spans.empty(); });
  }
  return sentences;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  // The epsilon guards products such as 0.29 * 100 = 28.999999999999996.
  const auto part = [n](double r) { return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9)); };
  const std::size_t validation = part(ratios.validation);
  const std::size_t test = part(ratios.test);
  return {n - validation - test, validation, test};
}

DatasetSplit split_dataset(std::vector<AnnotatedSentence> sentences, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0) {
    throw PreconditionError("split ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw PreconditionError("split ratios must sum to 1");
  }
  if (sentences.size() < 3) throw PreconditionError("splitting needs at least 3 sentences");

  const auto sizes = split_sizes(sentences.size(), ratios);
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& item = sentences[order[k]];
    if (k < sizes[0]) {
      split.train.push_back(std::move(item));
    } else if (k < sizes[0] + sizes[1]) {
      split.validation.push_back(std::move(item));
    } else {
      split.test.push_back(std::move(item));
    }
  }
  return split;
}

}  // namespace projner
