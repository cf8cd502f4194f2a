#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "projner/aligner.hpp"
#include "projner/config.hpp"
#include "projner/corpus.hpp"
#include "projner/evaluation.hpp"
#include "projner/io.hpp"
#include "projner/projection.hpp"
#include "projner/tagger.hpp"

namespace projner {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct CorpusFile {
  std::string name;  // relative to the corpus directory
  std::string digest;
};

// Pairs every `<doc>.txt` with `<doc>.ann`, ordered by document id. Throws
// MissingInputError for a missing directory or annotation file.
std::vector<StandoffDocument> ingest_corpus(const std::filesystem::path& dir, std::vector<CorpusFile>* files = nullptr);

std::vector<Sentence> sentencize(const std::vector<StandoffDocument>& docs, const SegmenterOptions& options = {});

// Placeholder synthesis with per-sentence seeds derived from spec.seed.
std::vector<Sentence> synthesize_all(const std::vector<Sentence>& sentences, const SyntheticValueSpec& spec);

struct AlignerRun {
  AlignmentModel model;
  std::vector<double> ibm1_log_likelihood;
  std::vector<double> ibm2_log_likelihood;
};

AlignerRun train_aligner(const ParallelCorpus& corpus, const AlignerSettings& settings);

ojson aligner_history_json(const AlignerRun& run);

// Splits `source ||| target` lines; lines without the separator are taken as
// the target side alone.
struct ParallelLine {
  std::optional<std::string> source;
  std::string target;
};
std::vector<ParallelLine> read_parallel_lines(const std::filesystem::path& path);

std::vector<AlignmentLinks> read_pharaoh_file(const std::filesystem::path& path);
std::string emit_pharaoh_file(const std::vector<AlignmentLinks>& alignments);

// Projects sentence k through alignment k onto target line k. Throws
// ShapeError when the counts differ and IntegrityError when a line's source
// side does not tokenize like its sentence.
std::vector<AnnotatedSentence> project_corpus(const std::vector<Sentence>& sentences,
                                              const std::vector<ParallelLine>& lines,
                                              const std::vector<AlignmentLinks>& alignments,
                                              ProjectionReport& report);

// Drops labels, resolves overlaps, optionally drops empty sentences, and
// records what was removed.
std::vector<AnnotatedSentence> finalize_dataset(std::vector<AnnotatedSentence> projected,
                                                const std::set<std::string>& dropped_labels, bool drop_empty,
                                                ProjectionReport& report);

std::vector<AnnotatedSentence> read_dataset(const std::filesystem::path& path);
std::string dataset_to_jsonl(const std::vector<AnnotatedSentence>& sentences);

// Tags each text with the model.
std::vector<AnnotatedSentence> tag_texts(const TaggerModel& model, const std::vector<std::string>& texts);

struct EvaluationOutput {
  std::optional<EvaluationReport> token;  // nullopt: not requested or n/a
  std::optional<EvaluationReport> character;
  std::string token_note;  // why token-level scores are n/a
  ojson json;
  std::string table;
};

// Pairs gold and predicted records by position. Label maps apply before
// scoring. Throws ShapeError on count or token-length mismatch.
EvaluationOutput evaluate_records(const std::vector<nlohmann::json>& gold, const std::vector<nlohmann::json>& pred,
                                  const std::optional<LabelMap>& gold_map, const std::optional<LabelMap>& pred_map,
                                  EvaluationLevel level);

// Runs every enabled stage and writes artifacts plus manifest.json into the
// output directory.
void run_pipeline(const PipelineConfig& config);

}  // namespace projner
