#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace projner {

using WordId = std::uint32_t;

// Interned word types. Id 0 is reserved for NULL in source vocabularies.
class Vocabulary {
 public:
  WordId intern(std::string_view word);
  std::optional<WordId> find(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

inline constexpr std::string_view kNullWord = "<NULL>";
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr std::size_t kDefaultMaxSentenceLength = 200;
inline constexpr std::size_t kDistortionLengthCap = 50;

struct SentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  // Throws PreconditionError on empty sides or over-long sentences.
  explicit ParallelCorpus(std::vector<SentencePair> pairs, std::size_t max_length = kDefaultMaxSentenceLength);

  // One pair per line, `source ||| target`; both sides tokenized with the
  // default tokenizer.
  static ParallelCorpus parse(std::string_view content, std::size_t max_length = kDefaultMaxSentenceLength);

  const std::vector<SentencePair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

 private:
  std::vector<SentencePair> pairs_;
};

// t(f|e), stored as one sorted row of target ids per source id (0 = NULL).
class TranslationTable {
 public:
  struct Entry {
    WordId target;
    double prob;
  };

  Vocabulary& source_vocab() { return source_vocab_; }
  Vocabulary& target_vocab() { return target_vocab_; }
  const Vocabulary& source_vocab() const { return source_vocab_; }
  const Vocabulary& target_vocab() const { return target_vocab_; }

  std::vector<std::vector<Entry>>& rows() { return rows_; }
  const std::vector<std::vector<Entry>>& rows() const { return rows_; }

  // Stored probability, 0 when the pair is absent. `source` may be kNullWord.
  double prob(std::string_view source, std::string_view target) const;
  double prob(WordId source, WordId target) const;
  std::optional<std::string> argmax(std::string_view source) const;

  // Largest |sum_f t(f|e) - 1| over all rows.
  double max_normalization_error() const;

 private:
  Vocabulary source_vocab_;
  Vocabulary target_vocab_;
  std::vector<std::vector<Entry>> rows_;
};

// a(i | j, l, m) for real source positions i, bucketed with l and m capped
// at kDistortionLengthCap. Positions beyond the cap share the last slot.
class DistortionTable {
 public:
  double prob(std::size_t i, std::size_t j, std::size_t l, std::size_t m) const;
  // Raw stored row for bucket (l, m), position j (already capped); empty if the
  // bucket was never trained.
  const double* row(std::size_t j, std::size_t l, std::size_t m) const;

  static std::pair<std::size_t, std::size_t> bucket_of(std::size_t l, std::size_t m);

  // Inserts a uniform bucket if absent; returns its offset.
  std::size_t ensure_bucket(std::size_t l, std::size_t m);
  std::optional<std::size_t> bucket_offset(std::size_t l, std::size_t m) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& buckets() const { return bucket_keys_; }

  double max_normalization_error() const;

 private:
  std::vector<std::pair<std::size_t, std::size_t>> bucket_keys_;
  std::vector<std::size_t> bucket_offsets_;
  std::unordered_map<std::uint64_t, std::size_t> bucket_index_;
  std::vector<double> values_;
};

struct AlignmentModel {
  TranslationTable lexicon;
  DistortionTable distortion;
  double null_prob = 0.0;
  bool diagonal_prior = false;
  double tension = 4.0;

  // Probability of aligning target position j to source position i (or NULL
  // when i is nullopt) in a sentence pair of lengths l, m.
  double position_prob(std::optional<std::size_t> i, std::size_t j, std::size_t l, std::size_t m) const;
};

struct TrainingOptions {
  std::size_t workers = 1;
  bool diagonal_prior = false;  // fixed exp(-tension·|i/l - j/m|) distortion
  double tension = 4.0;
};

struct Ibm1Result {
  TranslationTable table;
  // log_likelihood[k] is the corpus log-likelihood after k iterations.
  std::vector<double> log_likelihood;
};

struct Ibm2Result {
  AlignmentModel model;
  std::vector<double> log_likelihood;
};

// Throws PreconditionError on an empty corpus or iterations < 1.
Ibm1Result train_ibm1(const ParallelCorpus& corpus, int iterations, const TrainingOptions& options = {});

// Throws PreconditionError when `init` has an unnormalized row or
// iterations < 1.
Ibm2Result train_ibm2(const ParallelCorpus& corpus, int iterations, const TranslationTable& init,
                      const TrainingOptions& options = {});

double corpus_log_likelihood(const TranslationTable& table, const ParallelCorpus& corpus);
double corpus_log_likelihood(const AlignmentModel& model, const ParallelCorpus& corpus);

struct Link {
  std::size_t source = 0;
  std::size_t target = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

using AlignmentLinks = std::set<Link>;

AlignmentLinks viterbi_align(const AlignmentModel& model, const std::vector<std::string>& source,
                             const std::vector<std::string>& target);

// Aligns every pair of the corpus; output order follows the corpus.
std::vector<AlignmentLinks> viterbi_align_all(const AlignmentModel& model, const ParallelCorpus& corpus,
                                              std::size_t workers = 1);

// Throws ParseError naming the 1-based column of the offending token.
AlignmentLinks parse_pharaoh(std::string_view line);
std::string emit_pharaoh(const AlignmentLinks& links);

nlohmann::json to_json(const AlignmentModel& model);
AlignmentModel alignment_model_from_json(const nlohmann::json& j);

}  // namespace projner
