#include "projner/aligner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "parallel.hpp"
#include "projner/error.hpp"
#include "projner/tokenizer.hpp"
#include "projner/utf8.hpp"

namespace projner {

// ---------------------------------------------------------------------------
// Vocabulary, corpus

WordId Vocabulary::intern(std::string_view word) {
  if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
  return std::nullopt;
}

ParallelCorpus::ParallelCorpus(std::vector<SentencePair> pairs, std::size_t max_length) : pairs_(std::move(pairs)) {
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto& p = pairs_[k];
    if (p.source.empty() || p.target.empty()) {
      throw PreconditionError("sentence pair " + std::to_string(k) + " has an empty side");
    }
    if (p.source.size() > max_length || p.target.size() > max_length) {
      throw PreconditionError("sentence pair " + std::to_string(k) + " exceeds the maximum length of " +
                              std::to_string(max_length) + " tokens");
    }
  }
}

ParallelCorpus ParallelCorpus::parse(std::string_view content, std::size_t max_length) {
  std::vector<SentencePair> pairs;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin < content.size()) {
    auto end = content.find('\n', begin);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto sep = line.find(" ||| ");
    if (sep == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": missing ' ||| ' separator");
    }
    SentencePair pair{tokenize(line.substr(0, sep)).surfaces(), tokenize(line.substr(sep + 5)).surfaces()};
    if (pair.source.empty() || pair.target.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty source or target side");
    }
    pairs.push_back(std::move(pair));
  }
  return ParallelCorpus(std::move(pairs), max_length);
}

// ---------------------------------------------------------------------------
// Tables

double TranslationTable::prob(WordId source, WordId target) const {
  if (source >= rows_.size()) return 0.0;
  const auto& row = rows_[source];
  auto it = std::lower_bound(row.begin(), row.end(), target,
                             [](const Entry& e, WordId t) { return e.target < t; });
  return it != row.end() && it->target == target ? it->prob : 0.0;
}

double TranslationTable::prob(std::string_view source, std::string_view target) const {
  const auto e = source_vocab_.find(source);
  const auto f = target_vocab_.find(target);
  return e && f ? prob(*e, *f) : 0.0;
}

std::optional<std::string> TranslationTable::argmax(std::string_view source) const {
  const auto e = source_vocab_.find(source);
  if (!e || *e >= rows_.size() || rows_[*e].empty()) return std::nullopt;
  const Entry* best = nullptr;
  for (const auto& entry : rows_[*e]) {
    if (!best || entry.prob > best->prob) best = &entry;
  }
  return target_vocab_.word(best->target);
}

double TranslationTable::max_normalization_error() const {
  double worst = 0.0;
  for (const auto& row : rows_) {
    if (row.empty()) continue;
    double s = 0.0;
    for (const auto& e : row) s += e.prob;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::pair<std::size_t, std::size_t> DistortionTable::bucket_of(std::size_t l, std::size_t m) {
  return {std::min(l, kDistortionLengthCap), std::min(m, kDistortionLengthCap)};
}

namespace {
std::uint64_t bucket_key(std::size_t l, std::size_t m) { return (static_cast<std::uint64_t>(l) << 32) | m; }
}  // namespace

std::optional<std::size_t> DistortionTable::bucket_offset(std::size_t l, std::size_t m) const {
  const auto [bl, bm] = bucket_of(l, m);
  if (auto it = bucket_index_.find(bucket_key(bl, bm)); it != bucket_index_.end()) {
    return bucket_offsets_[it->second];
  }
  return std::nullopt;
}

std::size_t DistortionTable::ensure_bucket(std::size_t l, std::size_t m) {
  const auto [bl, bm] = bucket_of(l, m);
  if (auto off = bucket_offset(bl, bm)) return *off;
  const std::size_t offset = values_.size();
  bucket_index_.emplace(bucket_key(bl, bm), bucket_keys_.size());
  bucket_keys_.emplace_back(bl, bm);
  bucket_offsets_.push_back(offset);
  values_.resize(offset + bl * bm, 1.0 / static_cast<double>(bl));
  return offset;
}

const double* DistortionTable::row(std::size_t j, std::size_t l, std::size_t m) const {
  const auto off = bucket_offset(l, m);
  if (!off) return nullptr;
  const auto [bl, bm] = bucket_of(l, m);
  return values_.data() + *off + std::min(j, bm - 1) * bl;
}

double DistortionTable::prob(std::size_t i, std::size_t j, std::size_t l, std::size_t m) const {
  const double* r = row(j, l, m);
  if (!r) return 1.0 / static_cast<double>(l);
  const auto [bl, bm] = bucket_of(l, m);
  if (l <= bl) return r[i];
  double z = 0.0;
  for (std::size_t k = 0; k < l; ++k) z += r[std::min(k, bl - 1)];
  return r[std::min(i, bl - 1)] / z;
}

double DistortionTable::max_normalization_error() const {
  double worst = 0.0;
  for (std::size_t b = 0; b < bucket_keys_.size(); ++b) {
    const auto [l, m] = bucket_keys_[b];
    for (std::size_t j = 0; j < m; ++j) {
      const double* r = values_.data() + bucket_offsets_[b] + j * l;
      worst = std::max(worst, std::abs(std::accumulate(r, r + l, 0.0) - 1.0));
    }
  }
  return worst;
}

namespace {

void diagonal_weights(std::size_t j, std::size_t l, std::size_t m, double tension, std::vector<double>& out) {
  out.resize(l);
  double z = 0.0;
  const double tj = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
  for (std::size_t i = 0; i < l; ++i) {
    const double si = (static_cast<double>(i) + 0.5) / static_cast<double>(l);
    out[i] = std::exp(-tension * std::abs(si - tj));
    z += out[i];
  }
  for (auto& w : out) w /= z;
}

// Distribution over real source positions for target position j.
void position_weights(const AlignmentModel& model, std::size_t j, std::size_t l, std::size_t m,
                      std::vector<double>& out) {
  if (model.diagonal_prior) {
    diagonal_weights(j, l, m, model.tension, out);
    return;
  }
  out.resize(l);
  const double* r = model.distortion.row(j, l, m);
  if (!r) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(l));
    return;
  }
  const auto [bl, bm] = DistortionTable::bucket_of(l, m);
  if (l <= bl) {
    std::copy(r, r + l, out.begin());
    return;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    out[i] = r[std::min(i, bl - 1)];
    z += out[i];
  }
  for (auto& w : out) w /= z;
}

}  // namespace

double AlignmentModel::position_prob(std::optional<std::size_t> i, std::size_t j, std::size_t l,
                                     std::size_t m) const {
  if (!i) return null_prob;
  std::vector<double> w;
  position_weights(*this, j, l, m, w);
  return (1.0 - null_prob) * w.at(*i);
}

// ---------------------------------------------------------------------------
// EM

namespace {

struct EncodedPair {
  std::vector<WordId> source;  // without NULL
  std::vector<WordId> target;
  // Flat lexicon parameter index for (i, j), laid out j-major with i = 0 for
  // NULL and i = k + 1 for source position k.
  std::vector<std::uint32_t> lex_index;
  std::size_t dist_offset = 0;  // bucket offset in the distortion table
};

struct EmState {
  std::vector<EncodedPair> pairs;
  std::vector<std::size_t> row_begin;  // per source id, into `cols` / `probs`
  std::vector<WordId> cols;
  std::vector<double> probs;
  std::size_t target_tokens = 0;
};

// Builds vocabularies and the co-occurrence structure of the lexicon.
EmState encode(const ParallelCorpus& corpus, TranslationTable& table) {
  EmState st;
  auto& sv = table.source_vocab();
  auto& tv = table.target_vocab();
  sv.intern(kNullWord);
  st.pairs.reserve(corpus.size());
  for (const auto& p : corpus.pairs()) {
    EncodedPair ep;
    for (const auto& w : p.source) ep.source.push_back(sv.intern(w));
    for (const auto& w : p.target) ep.target.push_back(tv.intern(w));
    st.target_tokens += ep.target.size();
    st.pairs.push_back(std::move(ep));
  }

  std::vector<std::vector<WordId>> cooc(sv.size());
  for (const auto& ep : st.pairs) {
    for (WordId f : ep.target) cooc[0].push_back(f);
    for (WordId e : ep.source) {
      for (WordId f : ep.target) cooc[e].push_back(f);
    }
  }
  st.row_begin.resize(sv.size() + 1);
  for (std::size_t e = 0; e < cooc.size(); ++e) {
    auto& row = cooc[e];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    st.row_begin[e] = st.cols.size();
    st.cols.insert(st.cols.end(), row.begin(), row.end());
  }
  st.row_begin[sv.size()] = st.cols.size();
  st.probs.assign(st.cols.size(), 0.0);

  auto index_of = [&](WordId e, WordId f) {
    const auto b = st.cols.begin() + static_cast<std::ptrdiff_t>(st.row_begin[e]);
    const auto end = st.cols.begin() + static_cast<std::ptrdiff_t>(st.row_begin[e + 1]);
    return static_cast<std::uint32_t>(std::lower_bound(b, end, f) - st.cols.begin());
  };
  for (auto& ep : st.pairs) {
    const std::size_t l = ep.source.size();
    ep.lex_index.resize((l + 1) * ep.target.size());
    for (std::size_t j = 0; j < ep.target.size(); ++j) {
      ep.lex_index[j * (l + 1)] = index_of(0, ep.target[j]);
      for (std::size_t i = 0; i < l; ++i) ep.lex_index[j * (l + 1) + i + 1] = index_of(ep.source[i], ep.target[j]);
    }
  }
  return st;
}

void export_table(const EmState& st, TranslationTable& table) {
  auto& rows = table.rows();
  rows.assign(st.row_begin.size() - 1, {});
  for (std::size_t e = 0; e + 1 < st.row_begin.size(); ++e) {
    for (std::size_t k = st.row_begin[e]; k < st.row_begin[e + 1]; ++k) {
      rows[e].push_back(TranslationTable::Entry{st.cols[k], st.probs[k]});
    }
  }
}

void normalize_rows(EmState& st, const std::vector<double>& counts) {
  for (std::size_t e = 0; e + 1 < st.row_begin.size(); ++e) {
    const std::size_t b = st.row_begin[e];
    const std::size_t end = st.row_begin[e + 1];
    double total = 0.0;
    for (std::size_t k = b; k < end; ++k) total += counts[k];
    if (total <= 0.0) continue;
    for (std::size_t k = b; k < end; ++k) st.probs[k] = counts[k] / total;
  }
}

// Per-pair E-step output: posteriors in lex_index layout.
struct PairPosterior {
  std::vector<double> post;
  double log_likelihood = 0.0;
  double null_mass = 0.0;
};

constexpr std::size_t kWave = 1024;

// Runs the E-step over all pairs. `posterior_fn(pair_index, out)` fills a
// PairPosterior; `accumulate(pair_index, posterior)` runs sequentially in
// corpus order, which keeps the result independent of the worker count.
template <typename PosteriorFn, typename AccumulateFn>
std::pair<double, double> run_estep(const EmState& st, std::size_t workers, PosteriorFn&& posterior_fn,
                                    AccumulateFn&& accumulate) {
  const std::size_t n = st.pairs.size();
  std::vector<double> ll(n), null_mass(n);
  std::vector<PairPosterior> wave(std::min(kWave, n));
  for (std::size_t base = 0; base < n; base += kWave) {
    const std::size_t count = std::min(kWave, n - base);
    detail::parallel_for(count, workers, [&](std::size_t k) { posterior_fn(base + k, wave[k]); });
    for (std::size_t k = 0; k < count; ++k) {
      accumulate(base + k, wave[k]);
      ll[base + k] = wave[k].log_likelihood;
      null_mass[base + k] = wave[k].null_mass;
    }
  }
  return {detail::pairwise_sum(ll.data(), n), detail::pairwise_sum(null_mass.data(), n)};
}

void ibm1_posterior(const EmState& st, std::size_t p, PairPosterior& out) {
  const auto& ep = st.pairs[p];
  const std::size_t l1 = ep.source.size() + 1;
  const std::size_t m = ep.target.size();
  out.post.resize(l1 * m);
  out.log_likelihood = 0.0;
  out.null_mass = 0.0;
  const double uniform = 1.0 / static_cast<double>(l1);
  for (std::size_t j = 0; j < m; ++j) {
    double z = 0.0;
    for (std::size_t i = 0; i < l1; ++i) {
      const double s = std::max(st.probs[ep.lex_index[j * l1 + i]], kProbabilityFloor);
      out.post[j * l1 + i] = s;
      z += s;
    }
    for (std::size_t i = 0; i < l1; ++i) out.post[j * l1 + i] /= z;
    out.null_mass += out.post[j * l1];
    out.log_likelihood += std::log(z * uniform);
  }
}

}  // namespace

Ibm1Result train_ibm1(const ParallelCorpus& corpus, int iterations, const TrainingOptions& options) {
  if (corpus.empty()) throw PreconditionError("IBM-1 training needs a nonempty corpus");
  if (iterations < 1) throw PreconditionError("IBM-1 training needs at least one iteration");

  Ibm1Result result;
  EmState st = encode(corpus, result.table);
  for (std::size_t e = 0; e + 1 < st.row_begin.size(); ++e) {
    const std::size_t width = st.row_begin[e + 1] - st.row_begin[e];
    for (std::size_t k = st.row_begin[e]; k < st.row_begin[e + 1]; ++k) st.probs[k] = 1.0 / static_cast<double>(width);
  }

  std::vector<double> counts(st.probs.size());
  for (int it = 0; it < iterations; ++it) {
    std::fill(counts.begin(), counts.end(), 0.0);
    const auto [ll, null_mass] = run_estep(
        st, options.workers, [&](std::size_t p, PairPosterior& out) { ibm1_posterior(st, p, out); },
        [&](std::size_t p, const PairPosterior& post) {
          const auto& idx = st.pairs[p].lex_index;
          for (std::size_t k = 0; k < idx.size(); ++k) counts[idx[k]] += post.post[k];
        });
    (void)null_mass;
    result.log_likelihood.push_back(ll);
    normalize_rows(st, counts);
  }
  export_table(st, result.table);
  result.log_likelihood.push_back(corpus_log_likelihood(result.table, corpus));
  return result;
}

namespace {

void ibm2_posterior(const EmState& st, const AlignmentModel& model, std::size_t p, PairPosterior& out) {
  const auto& ep = st.pairs[p];
  const std::size_t l = ep.source.size();
  const std::size_t l1 = l + 1;
  const std::size_t m = ep.target.size();
  out.post.resize(l1 * m);
  out.log_likelihood = 0.0;
  out.null_mass = 0.0;
  std::vector<double> w;
  for (std::size_t j = 0; j < m; ++j) {
    position_weights(model, j, l, m, w);
    double z = 0.0;
    const double s0 = std::max(st.probs[ep.lex_index[j * l1]], kProbabilityFloor) * model.null_prob;
    out.post[j * l1] = s0;
    z += s0;
    for (std::size_t i = 0; i < l; ++i) {
      const double s = std::max(st.probs[ep.lex_index[j * l1 + i + 1]], kProbabilityFloor) *
                       (1.0 - model.null_prob) * w[i];
      out.post[j * l1 + i + 1] = s;
      z += s;
    }
    for (std::size_t i = 0; i < l1; ++i) out.post[j * l1 + i] /= z;
    out.null_mass += out.post[j * l1];
    out.log_likelihood += std::log(z);
  }
}

}  // namespace

Ibm2Result train_ibm2(const ParallelCorpus& corpus, int iterations, const TranslationTable& init,
                      const TrainingOptions& options) {
  if (corpus.empty()) throw PreconditionError("IBM-2 training needs a nonempty corpus");
  if (iterations < 1) throw PreconditionError("IBM-2 training needs at least one iteration");
  if (const double err = init.max_normalization_error(); err > 1e-9) {
    throw PreconditionError("initial translation table is not normalized (max row error " + std::to_string(err) +
                            ")");
  }

  Ibm2Result result;
  AlignmentModel& model = result.model;
  model.diagonal_prior = options.diagonal_prior;
  model.tension = options.tension;
  EmState st = encode(corpus, model.lexicon);

  // Lexicon from the initial table, renormalized over co-occurring targets.
  const auto& sv = model.lexicon.source_vocab();
  const auto& tv = model.lexicon.target_vocab();
  for (std::size_t e = 0; e + 1 < st.row_begin.size(); ++e) {
    double total = 0.0;
    for (std::size_t k = st.row_begin[e]; k < st.row_begin[e + 1]; ++k) {
      st.probs[k] = std::max(init.prob(sv.word(static_cast<WordId>(e)), tv.word(st.cols[k])), kProbabilityFloor);
      total += st.probs[k];
    }
    for (std::size_t k = st.row_begin[e]; k < st.row_begin[e + 1]; ++k) st.probs[k] /= total;
  }

  double implied_null = 0.0;
  for (auto& ep : st.pairs) {
    if (!model.diagonal_prior) ep.dist_offset = model.distortion.ensure_bucket(ep.source.size(), ep.target.size());
    implied_null += static_cast<double>(ep.target.size()) / static_cast<double>(ep.source.size() + 1);
  }
  model.null_prob = implied_null / static_cast<double>(st.target_tokens);

  std::vector<double> lex_counts(st.probs.size());
  std::vector<double> dist_counts(model.distortion.values().size());
  for (int it = 0; it < iterations; ++it) {
    std::fill(lex_counts.begin(), lex_counts.end(), 0.0);
    std::fill(dist_counts.begin(), dist_counts.end(), 0.0);
    const auto [ll, null_mass] = run_estep(
        st, options.workers, [&](std::size_t p, PairPosterior& out) { ibm2_posterior(st, model, p, out); },
        [&](std::size_t p, const PairPosterior& post) {
          const auto& ep = st.pairs[p];
          const std::size_t l = ep.source.size();
          const std::size_t m = ep.target.size();
          for (std::size_t k = 0; k < ep.lex_index.size(); ++k) lex_counts[ep.lex_index[k]] += post.post[k];
          if (model.diagonal_prior) return;
          const auto [bl, bm] = DistortionTable::bucket_of(l, m);
          for (std::size_t j = 0; j < m; ++j) {
            double* row = dist_counts.data() + ep.dist_offset + std::min(j, bm - 1) * bl;
            for (std::size_t i = 0; i < l; ++i) row[std::min(i, bl - 1)] += post.post[j * (l + 1) + i + 1];
          }
        });
    result.log_likelihood.push_back(ll);

    normalize_rows(st, lex_counts);
    model.null_prob = null_mass / static_cast<double>(st.target_tokens);
    if (!model.diagonal_prior) {
      auto& values = model.distortion.values();
      for (const auto& [bl, bm] : model.distortion.buckets()) {
        const std::size_t off = *model.distortion.bucket_offset(bl, bm);
        for (std::size_t j = 0; j < bm; ++j) {
          const std::size_t row = off + j * bl;
          double total = 0.0;
          for (std::size_t i = 0; i < bl; ++i) total += dist_counts[row + i];
          if (total <= 0.0) continue;
          for (std::size_t i = 0; i < bl; ++i) values[row + i] = dist_counts[row + i] / total;
        }
      }
    }
  }
  export_table(st, model.lexicon);
  result.log_likelihood.push_back(corpus_log_likelihood(model, corpus));
  return result;
}

namespace {

double floored(const TranslationTable& table, std::optional<WordId> e, std::optional<WordId> f) {
  if (!e || !f) return kProbabilityFloor;
  return std::max(table.prob(*e, *f), kProbabilityFloor);
}

}  // namespace

double corpus_log_likelihood(const TranslationTable& table, const ParallelCorpus& corpus) {
  std::vector<double> per_pair;
  per_pair.reserve(corpus.size());
  const auto null_id = table.source_vocab().find(kNullWord);
  for (const auto& p : corpus.pairs()) {
    std::vector<std::optional<WordId>> src;
    for (const auto& w : p.source) src.push_back(table.source_vocab().find(w));
    double ll = 0.0;
    const double uniform = 1.0 / static_cast<double>(src.size() + 1);
    for (const auto& w : p.target) {
      const auto f = table.target_vocab().find(w);
      double z = floored(table, null_id, f);
      for (const auto& e : src) z += floored(table, e, f);
      ll += std::log(z * uniform);
    }
    per_pair.push_back(ll);
  }
  return detail::pairwise_sum(per_pair.data(), per_pair.size());
}

double corpus_log_likelihood(const AlignmentModel& model, const ParallelCorpus& corpus) {
  std::vector<double> per_pair;
  per_pair.reserve(corpus.size());
  const auto& table = model.lexicon;
  const auto null_id = table.source_vocab().find(kNullWord);
  std::vector<double> w;
  for (const auto& p : corpus.pairs()) {
    const std::size_t l = p.source.size();
    const std::size_t m = p.target.size();
    std::vector<std::optional<WordId>> src;
    for (const auto& s : p.source) src.push_back(table.source_vocab().find(s));
    double ll = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto f = table.target_vocab().find(p.target[j]);
      position_weights(model, j, l, m, w);
      double z = floored(table, null_id, f) * model.null_prob;
      for (std::size_t i = 0; i < l; ++i) z += floored(table, src[i], f) * (1.0 - model.null_prob) * w[i];
      ll += std::log(z);
    }
    per_pair.push_back(ll);
  }
  return detail::pairwise_sum(per_pair.data(), per_pair.size());
}

// ---------------------------------------------------------------------------
// Decoding and Pharaoh

AlignmentLinks viterbi_align(const AlignmentModel& model, const std::vector<std::string>& source,
                             const std::vector<std::string>& target) {
  AlignmentLinks links;
  if (source.empty() || target.empty()) return links;
  const auto& table = model.lexicon;
  const auto null_id = table.source_vocab().find(kNullWord);
  std::vector<std::optional<WordId>> src;
  for (const auto& s : source) src.push_back(table.source_vocab().find(s));
  const std::size_t l = source.size();
  const std::size_t m = target.size();
  std::vector<double> w;
  for (std::size_t j = 0; j < m; ++j) {
    const auto f = table.target_vocab().find(target[j]);
    position_weights(model, j, l, m, w);
    // NULL sits at virtual position -1 and wins ties.
    double best = floored(table, null_id, f) * model.null_prob;
    std::optional<std::size_t> best_i;
    for (std::size_t i = 0; i < l; ++i) {
      const double s = floored(table, src[i], f) * (1.0 - model.null_prob) * w[i];
      if (s > best) {
        best = s;
        best_i = i;
      }
    }
    if (best_i) links.insert(Link{*best_i, j});
  }
  return links;
}

std::vector<AlignmentLinks> viterbi_align_all(const AlignmentModel& model, const ParallelCorpus& corpus,
                                              std::size_t workers) {
  std::vector<AlignmentLinks> out(corpus.size());
  detail::parallel_for(corpus.size(), workers, [&](std::size_t k) {
    out[k] = viterbi_align(model, corpus.pairs()[k].source, corpus.pairs()[k].target);
  });
  return out;
}

AlignmentLinks parse_pharaoh(std::string_view line) {
  AlignmentLinks links;
  std::size_t pos = 0;
  while (pos < line.size()) {
    if (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r' || line[pos] == '\n') {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r' && line[end] != '\n') ++end;
    const std::string_view token = line.substr(pos, end - pos);
    const auto dash = token.find('-');
    std::size_t i = 0, j = 0;
    bool ok = dash != std::string_view::npos && dash > 0 && dash + 1 < token.size();
    if (ok) {
      const char* b = token.data();
      auto r1 = std::from_chars(b, b + dash, i);
      auto r2 = std::from_chars(b + dash + 1, b + token.size(), j);
      ok = r1.ec == std::errc{} && r1.ptr == b + dash && r2.ec == std::errc{} && r2.ptr == b + token.size();
    }
    if (!ok) {
      throw ParseError("malformed alignment pair '" + std::string(token) + "' at column " + std::to_string(pos + 1));
    }
    links.insert(Link{i, j});
    pos = end;
  }
  return links;
}

std::string emit_pharaoh(const AlignmentLinks& links) {
  std::string out;
  for (const auto& link : links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(link.source) + "-" + std::to_string(link.target);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const AlignmentModel& model) {
  nlohmann::json j;
  j["format"] = "projner-alignment-model";
  j["version"] = 1;
  j["null_prob"] = model.null_prob;
  j["diagonal_prior"] = model.diagonal_prior;
  j["tension"] = model.tension;
  j["length_cap"] = kDistortionLengthCap;
  j["source_vocab"] = model.lexicon.source_vocab().words();
  j["target_vocab"] = model.lexicon.target_vocab().words();
  auto& lex = j["lexicon"] = nlohmann::json::array();
  const auto& rows = model.lexicon.rows();
  for (std::size_t e = 0; e < rows.size(); ++e) {
    std::vector<WordId> targets;
    std::vector<double> probs;
    for (const auto& entry : rows[e]) {
      targets.push_back(entry.target);
      probs.push_back(entry.prob);
    }
    lex.push_back({{"source", e}, {"targets", targets}, {"probs", probs}});
  }
  auto& dist = j["distortion"] = nlohmann::json::array();
  const auto& values = model.distortion.values();
  for (const auto& [l, m] : model.distortion.buckets()) {
    const std::size_t off = *model.distortion.bucket_offset(l, m);
    dist.push_back({{"l", l},
                    {"m", m},
                    {"probs", std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(off),
                                                  values.begin() + static_cast<std::ptrdiff_t>(off + l * m))}});
  }
  return j;
}

AlignmentModel alignment_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "projner-alignment-model") throw ParseError("not an alignment model file");
    if (j.at("version").get<int>() != 1) throw ParseError("unsupported alignment model version");
    if (j.at("length_cap").get<std::size_t>() != kDistortionLengthCap) {
      throw ParseError("alignment model length cap differs from this build");
    }
    AlignmentModel model;
    model.null_prob = j.at("null_prob").get<double>();
    model.diagonal_prior = j.at("diagonal_prior").get<bool>();
    model.tension = j.at("tension").get<double>();
    for (const auto& w : j.at("source_vocab")) model.lexicon.source_vocab().intern(w.get<std::string>());
    for (const auto& w : j.at("target_vocab")) model.lexicon.target_vocab().intern(w.get<std::string>());
    auto& rows = model.lexicon.rows();
    rows.resize(model.lexicon.source_vocab().size());
    for (const auto& row : j.at("lexicon")) {
      const auto e = row.at("source").get<std::size_t>();
      const auto targets = row.at("targets").get<std::vector<WordId>>();
      const auto probs = row.at("probs").get<std::vector<double>>();
      if (e >= rows.size() || targets.size() != probs.size()) throw ParseError("inconsistent lexicon row");
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] >= model.lexicon.target_vocab().size()) throw ParseError("lexicon target id out of range");
        rows[e].push_back(TranslationTable::Entry{targets[k], probs[k]});
      }
    }
    for (const auto& bucket : j.at("distortion")) {
      const auto l = bucket.at("l").get<std::size_t>();
      const auto m = bucket.at("m").get<std::size_t>();
      const auto probs = bucket.at("probs").get<std::vector<double>>();
      if (probs.size() != l * m) throw ParseError("inconsistent distortion bucket");
      const std::size_t off = model.distortion.ensure_bucket(l, m);
      std::copy(probs.begin(), probs.end(), model.distortion.values().begin() + static_cast<std::ptrdiff_t>(off));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("alignment model: ") + e.what());
  }
}

}  // namespace projner
