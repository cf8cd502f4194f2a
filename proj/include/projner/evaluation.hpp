#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "projner/corpus.hpp"
#include "projner/io.hpp"
#include "projner/projection.hpp"

namespace projner {

inline constexpr std::string_view kOutsideLabel = "O";

struct ClassScore {
  std::string label;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  std::size_t support() const { return tp + fn; }
  friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

// Precision, recall and F1 from counts, 0 wherever a denominator is 0.
ClassScore make_class_score(std::string label, std::size_t tp, std::size_t fp, std::size_t fn);

struct WeightedTotal {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;

  friend bool operator==(const WeightedTotal&, const WeightedTotal&) = default;
};

struct EvaluationReport {
  std::vector<ClassScore> per_class;  // sorted by label, O excluded
  WeightedTotal total;                // weighted by gold support

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

using LabelSequence = std::vector<std::string>;

// Per-token entity label (BILOU position stripped) or "O". Throws
// PreconditionError for overlapping spans.
LabelSequence token_labels(const AnnotatedSentence& sentence);

// `classes` empty means every non-O label seen in gold or pred. Throws
// ShapeError naming the first sentence whose lengths differ.
EvaluationReport token_metrics(const std::vector<LabelSequence>& gold, const std::vector<LabelSequence>& pred,
                               std::vector<std::string> classes = {});

// Character-level annotation: a text with labelled character spans.
struct CharAnnotation {
  std::string text;
  std::vector<EntitySpan> spans;
};

CharAnnotation char_annotation(const AnnotatedSentence& sentence);

// Per-character labels; throws PreconditionError for overlapping spans.
LabelSequence char_labels(const CharAnnotation& annotation);

// Throws IntegrityError when paired texts differ.
EvaluationReport char_metrics(const std::vector<CharAnnotation>& gold, const std::vector<CharAnnotation>& pred,
                              std::vector<std::string> classes = {});
EvaluationReport char_metrics(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& pred,
                              std::vector<std::string> classes = {});

// external label -> internal label, or nullopt to discard.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::map<std::string, std::optional<std::string>> mapping) : mapping_(std::move(mapping)) {}

  // `external=internal` lines; `external=` discards. Blank lines and lines
  // starting with '#' are ignored. Throws ConfigError on malformed or
  // duplicate entries.
  static LabelMap parse(std::string_view content);
  static LabelMap identity(const std::vector<std::string>& labels);

  const std::map<std::string, std::optional<std::string>>& mapping() const { return mapping_; }

 private:
  std::map<std::string, std::optional<std::string>> mapping_;
};

// Relabels or removes spans; sentences left without spans are kept. Throws
// ConfigError listing every label the map does not cover.
std::vector<AnnotatedSentence> map_labels(std::vector<AnnotatedSentence> sentences, const LabelMap& map);
std::vector<CharAnnotation> map_labels(std::vector<CharAnnotation> annotations, const LabelMap& map);

ojson report_to_json(const EvaluationReport& report);
// Pr / Re / F1 rows with one column per class plus Total.
std::string format_report_table(const EvaluationReport& report, std::string_view title);

}  // namespace projner
