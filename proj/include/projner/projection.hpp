#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "projner/aligner.hpp"
#include "projner/corpus.hpp"
#include "projner/tokenizer.hpp"

namespace projner {

struct TokenSpan {
  std::string label;
  std::size_t first = 0;  // inclusive token index
  std::size_t last = 0;   // inclusive token index
  std::size_t start = 0;  // char offset of tokens[first]
  std::size_t end = 0;    // char end of tokens[last]

  std::size_t length() const { return last - first + 1; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct AnnotatedSentence {
  TokenizedSentence tokens;
  std::vector<TokenSpan> spans;

  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

// Builds a TokenSpan with char bounds taken from the token range.
TokenSpan make_token_span(const TokenizedSentence& ts, std::string label, std::size_t first, std::size_t last);

// Contiguous min..max cover of all target positions linked to the source
// range; nullopt when nothing is linked. Throws RangeError when the source
// range is inverted.
std::optional<TokenRange> project_annotation(const AlignmentLinks& alignment, TokenRange source,
                                             std::size_t target_token_count);

struct LabelTally {
  std::size_t projected = 0;
  std::size_t dropped = 0;
  std::size_t widened = 0;        // either kind of widening below
  std::size_t widened_subword = 0;  // source span did not sit on token bounds
  std::size_t noncontiguous = 0;    // target image had gaps, cover taken

  friend bool operator==(const LabelTally&, const LabelTally&) = default;
};

struct ProjectionReport {
  std::map<std::string, LabelTally> per_label;
  std::size_t sentences_total = 0;   // projected sentences before filtering
  std::size_t sentences_kept = 0;    // after label and empty-sentence filtering
  std::size_t spans_removed_by_label = 0;
  std::size_t spans_removed_by_overlap = 0;

  void merge(const ProjectionReport& other);
  friend bool operator==(const ProjectionReport&, const ProjectionReport&) = default;
};

// Source char spans -> source token spans -> projected target token spans.
// Dropped annotations are tallied in `report` when given. Throws RangeError
// for links outside either sentence.
AnnotatedSentence project_sentence(const Sentence& source, const TokenizedSentence& source_tokens,
                                   const TokenizedSentence& target, const AlignmentLinks& alignment,
                                   ProjectionReport* report = nullptr);

// Keeps the longest span and discards everything overlapping it, repeatedly;
// ties go to the earlier start, then the smaller label. Output sorted by
// start.
std::vector<TokenSpan> resolve_overlaps(std::vector<TokenSpan> spans);

const std::set<std::string>& default_dropped_labels();

std::vector<AnnotatedSentence> filter_dataset(std::vector<AnnotatedSentence> sentences,
                                              const std::set<std::string>& dropped_labels, bool drop_empty);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<AnnotatedSentence> train;
  std::vector<AnnotatedSentence> validation;
  std::vector<AnnotatedSentence> test;
  std::uint64_t seed = 0;
};

// Sizes of (train, validation, test): floor for validation and test,
// remainder to train.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

// Throws PreconditionError for n < 3 or ratios that are not positive and
// summing to 1 within 1e-9.
DatasetSplit split_dataset(std::vector<AnnotatedSentence> sentences, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace projner
