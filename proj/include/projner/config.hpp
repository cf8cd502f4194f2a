#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "projner/io.hpp"
#include "projner/projection.hpp"
#include "projner/tagger.hpp"

namespace projner {

// `key = value` lines; '#' starts a comment line. Throws ConfigError on
// malformed lines and duplicate keys.
struct KeyValueFile {
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry> entries;

  static KeyValueFile parse(std::string_view content, std::string_view source = "config");
};

// Throws ConfigError naming the key when the value does not parse.
bool parse_bool(std::string_view key, std::string_view value);
std::uint64_t parse_unsigned(std::string_view key, std::string_view value);
double parse_double(std::string_view key, std::string_view value);
// Comma separated, optionally wrapped in [ ]; items trimmed, empties dropped.
std::vector<std::string> parse_list(std::string_view value);
SplitRatios parse_ratios(std::string_view key, std::string_view value);

// Applies `dim`, `rows`, ... keys (with the given prefix) on top of `hp`.
// Unknown keys under the prefix are rejected.
void apply_hyperparams(TaggerHyperparams& hp, const KeyValueFile& file, std::string_view prefix);

enum class EvaluationLevel { Token, Char, Both };
EvaluationLevel parse_level(std::string_view value);
std::string_view to_string(EvaluationLevel level);

struct AlignerSettings {
  std::size_t ibm1_iterations = 5;
  std::size_t ibm2_iterations = 5;
  bool diagonal_prior = false;
  double tension = 4.0;
  std::size_t workers = 1;
  std::size_t max_sentence_length = kDefaultMaxSentenceLength;
};

struct PipelineConfig {
  // Raw path strings as written; resolved() gives them relative to base_dir.
  std::string corpus_dir;
  std::string parallel_file;
  std::optional<std::string> alignment_file;
  std::string output_dir;
  std::optional<std::string> label_map;
  std::filesystem::path base_dir;

  std::uint64_t synthesis_seed = 1;
  std::uint64_t split_seed = 1;
  std::uint64_t training_seed = 1;

  bool synthesize = true;
  bool train = true;
  bool evaluate = true;

  std::set<std::string> dropped_labels = default_dropped_labels();
  bool drop_empty = true;
  SplitRatios ratios;

  std::vector<std::string> abbreviations = SegmenterOptions{}.abbreviations;
  std::string placeholder_pattern{kDefaultPlaceholderPattern};

  AlignerSettings aligner;
  TaggerHyperparams tagger;
  EvaluationLevel level = EvaluationLevel::Both;

  std::filesystem::path resolved(const std::string& path) const;
};

// Builds a config from file content, filling defaults. Relative paths are
// taken against `base_dir`. Throws ConfigError listing unknown keys, and for
// missing required paths or invalid values.
PipelineConfig parse_config(std::string_view content, const std::filesystem::path& base_dir);

// Reads and parses the file, then checks that every input path exists
// (MissingInputError otherwise).
PipelineConfig validate_config(const std::filesystem::path& path);

// Every field, defaults included.
ojson config_to_json(const PipelineConfig& config);

}  // namespace projner
