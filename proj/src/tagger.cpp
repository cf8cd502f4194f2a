#include "projner/tagger.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "projner/error.hpp"
#include "projner/io.hpp"
#include "projner/random.hpp"

namespace projner {

std::uint64_t bloom_hash(std::string_view surface, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset;
  for (int b = 0; b < 8; ++b) {
    h ^= (seed >> (8 * b)) & 0xFF;
    h *= kFnvPrime;
  }
  return fnv1a64(surface, h);
}

std::vector<std::span<double>> TaggerWeights::tensors() {
  std::vector<std::span<double>> out{embeddings.data};
  for (std::size_t l = 0; l < conv.size(); ++l) {
    out.emplace_back(conv[l].data);
    out.emplace_back(conv_bias[l]);
  }
  out.emplace_back(projection.data);
  out.emplace_back(projection_bias);
  out.emplace_back(actions.data);
  out.emplace_back(action_bias);
  return out;
}

std::vector<std::span<const double>> TaggerWeights::tensors() const {
  std::vector<std::span<const double>> out;
  for (auto t : const_cast<TaggerWeights*>(this)->tensors()) out.emplace_back(t.data(), t.size());
  return out;
}

TaggerWeights TaggerWeights::zeros_like() const {
  TaggerWeights z = *this;
  for (auto t : z.tensors()) std::fill(t.begin(), t.end(), 0.0);
  return z;
}

namespace {

void check_hyperparams(const TaggerHyperparams& hp) {
  if (hp.dim == 0 || hp.rows == 0 || hp.hidden == 0) throw PreconditionError("tagger dimensions must be positive");
  if (hp.hash_seeds == 0 || hp.hash_seeds > kMaxHashSeeds) {
    throw PreconditionError("tagger hash_seeds must be in [1, " + std::to_string(kMaxHashSeeds) + "]");
  }
  if (hp.batch_size == 0) throw PreconditionError("tagger batch_size must be positive");
  if (hp.learning_rate < 0 || !std::isfinite(hp.learning_rate)) {
    throw PreconditionError("tagger learning_rate must be finite and non-negative");
  }
}

void glorot(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
  for (auto& x : m.data) x = rng.uniform(-limit, limit);
}

}  // namespace

TaggerModel::TaggerModel(TaggerHyperparams hyperparams, TagInventory inventory)
    : hp_(hyperparams), inventory_(std::move(inventory)) {
  check_hyperparams(hp_);
  Rng rng(hp_.seed);
  const std::size_t d = hp_.dim;
  const std::size_t win = 2 * hp_.window + 1;

  weights_.embeddings = Matrix(hp_.rows, d);
  for (auto& x : weights_.embeddings.data) x = rng.uniform(-0.1, 0.1);
  for (std::size_t l = 0; l < hp_.depth; ++l) {
    Matrix w(d, win * d);
    glorot(w, rng);
    weights_.conv.push_back(std::move(w));
    weights_.conv_bias.emplace_back(d, 0.0);
  }
  weights_.projection = Matrix(hp_.hidden, d);
  glorot(weights_.projection, rng);
  weights_.projection_bias.assign(hp_.hidden, 0.0);
  weights_.actions = Matrix(inventory_.action_count(), hp_.hidden);
  glorot(weights_.actions, rng);
  weights_.action_bias.assign(inventory_.action_count(), 0.0);
}

std::vector<std::size_t> TaggerModel::bloom_rows(std::string_view surface) const {
  std::vector<std::size_t> rows;
  rows.reserve(hp_.hash_seeds);
  for (std::size_t h = 0; h < hp_.hash_seeds; ++h) rows.push_back(bloom_hash(surface, kBloomSeeds[h]) % hp_.rows);
  return rows;
}

std::vector<double> TaggerModel::bloom_embed(std::string_view surface) const {
  std::vector<double> v(hp_.dim, 0.0);
  for (std::size_t r : bloom_rows(surface)) {
    const double* row = weights_.embeddings.row(r);
    for (std::size_t k = 0; k < hp_.dim; ++k) v[k] += row[k];
  }
  return v;
}

Matrix TaggerModel::embed(const std::vector<std::string>& tokens) const {
  Matrix out(tokens.size(), hp_.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto v = bloom_embed(tokens[i]);
    std::copy(v.begin(), v.end(), out.row(i));
  }
  return out;
}

Matrix TaggerModel::encode_context(const Matrix& token_vectors) const {
  const std::size_t n = token_vectors.rows;
  const std::size_t d = hp_.dim;
  const auto w = static_cast<std::ptrdiff_t>(hp_.window);
  Matrix x = token_vectors;
  for (std::size_t l = 0; l < weights_.conv.size(); ++l) {
    const Matrix& W = weights_.conv[l];
    const auto& b = weights_.conv_bias[l];
    Matrix next = x;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t out = 0; out < d; ++out) {
        double z = b[out];
        const double* wrow = W.row(out);
        for (std::ptrdiff_t o = -w; o <= w; ++o) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + o;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
          const double* xs = x.row(static_cast<std::size_t>(src));
          const double* wk = wrow + static_cast<std::size_t>(o + w) * d;
          for (std::size_t k = 0; k < d; ++k) z += wk[k] * xs[k];
        }
        next(i, out) += std::max(0.0, z);
      }
    }
    x = std::move(next);
  }
  return x;
}

Matrix TaggerModel::project_tokens(const Matrix& contextual) const {
  const std::size_t h = hp_.hidden;
  Matrix out(contextual.rows, h);
  for (std::size_t i = 0; i < contextual.rows; ++i) {
    const double* x = contextual.row(i);
    for (std::size_t o = 0; o < h; ++o) {
      double z = weights_.projection_bias[o];
      const double* wrow = weights_.projection.row(o);
      for (std::size_t k = 0; k < contextual.cols; ++k) z += wrow[k] * x[k];
      out(i, o) = z;
    }
  }
  return out;
}

std::vector<double> TaggerModel::state_features(const Matrix& projected, const TransitionState& state) const {
  std::vector<double> f(projected.cols, 0.0);
  auto add = [&](std::optional<std::size_t> idx) {
    if (!idx) return;
    const double* row = projected.row(*idx);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += row[k];
  };
  add(state.current);
  add(state.previous);
  add(state.last_entity_start);
  return f;
}

std::vector<double> TaggerModel::action_scores(const std::vector<double>& features) const {
  const std::size_t na = inventory_.action_count();
  std::vector<double> scores(na);
  for (std::size_t a = 0; a < na; ++a) {
    double s = weights_.action_bias[a];
    const double* wrow = weights_.actions.row(a);
    for (std::size_t k = 0; k < features.size(); ++k) s += wrow[k] * std::max(0.0, features[k]);
    scores[a] = s;
  }
  return scores;
}

std::vector<double> masked_softmax(const std::vector<double>& scores, const std::vector<bool>& mask) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (mask[a]) best = std::max(best, scores[a]);
  }
  if (best == -std::numeric_limits<double>::infinity()) throw PreconditionError("all actions are masked");
  std::vector<double> p(scores.size(), 0.0);
  double z = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (!mask[a]) continue;
    p[a] = std::exp(scores[a] - best);
    z += p[a];
  }
  for (auto& x : p) x /= z;
  return p;
}

std::vector<double> TaggerModel::score_actions(const std::vector<double>& features,
                                               const std::vector<bool>& mask) const {
  if (mask.size() != inventory_.action_count()) throw PreconditionError("mask size differs from action count");
  return masked_softmax(action_scores(features), mask);
}

std::optional<std::size_t> argmax_masked(const std::vector<double>& probs, const std::vector<bool>& mask) {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (!mask[a]) continue;
    if (!best || probs[a] > probs[*best]) best = a;
  }
  return best;
}

std::vector<std::size_t> TaggerModel::greedy_parse_vectors(const Matrix& contextual) const {
  const Matrix projected = project_tokens(contextual);
  const std::size_t n = contextual.rows;
  std::vector<std::size_t> actions;
  actions.reserve(n);
  std::optional<std::size_t> entity_start;
  for (std::size_t t = 0; t < n; ++t) {
    TransitionState state{t, t > 0 ? std::optional<std::size_t>(t - 1) : std::nullopt, entity_start};
    const auto mask = valid_actions(actions.empty() ? std::nullopt : std::optional(actions.back()), t + 1 == n,
                                    inventory_);
    const auto probs = score_actions(state_features(projected, state), mask);
    const std::size_t a = *argmax_masked(probs, mask);
    const BilouTag tag = inventory_.tag_of(a);
    if (tag == BilouTag::Begin || tag == BilouTag::Unit) entity_start = t;
    actions.push_back(a);
  }
  return actions;
}

std::vector<std::size_t> TaggerModel::greedy_parse(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) return {};
  return greedy_parse_vectors(encode_context(embed(tokens)));
}

std::vector<TokenSpan> TaggerModel::tag(const TokenizedSentence& sentence) const {
  std::vector<TokenSpan> spans;
  for (const auto& r : decode_actions(greedy_parse(sentence.surfaces()), inventory_)) {
    spans.push_back(make_token_span(sentence, r.label, r.first, r.last));
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Model container
//
//   bytes 0-7   magic "PRJNTAGR"
//   u32         format version (1)
//   u32         reserved, 0
//   u64         header length H
//   H bytes     UTF-8 JSON header: {"hyperparams": {...}, "labels": [...]}
//   tensors     for each tensor of TaggerWeights::tensors(), in order:
//               u64 element count, then that many IEEE-754 binary64 values
// All integers and doubles are little-endian.

namespace {

constexpr char kMagic[8] = {'P', 'R', 'J', 'N', 'T', 'A', 'G', 'R'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    T swapped{};
    for (std::size_t b = 0; b < sizeof(T); ++b) swapped |= ((value >> (8 * b)) & 0xFF) << (8 * (sizeof(T) - 1 - b));
    return swapped;
  }
  return value;
}

template <typename T>
void put(std::string& out, T value) {
  value = to_little_endian(value);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_double(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw ParseError("tagger model file is truncated");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little_endian(value);
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError("tagger model file is truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

nlohmann::ordered_json hyperparams_json(const TaggerHyperparams& hp) {
  return {{"dim", hp.dim},          {"rows", hp.rows},
          {"hash_seeds", hp.hash_seeds}, {"window", hp.window},
          {"depth", hp.depth},      {"hidden", hp.hidden},
          {"learning_rate", hp.learning_rate}, {"batch_size", hp.batch_size},
          {"epochs", hp.epochs},    {"seed", hp.seed}};
}

}  // namespace

std::string TaggerModel::serialize() const {
  nlohmann::ordered_json header;
  header["hyperparams"] = hyperparams_json(hp_);
  header["labels"] = inventory_.labels();
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kModelVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  for (auto t : weights_.tensors()) {
    put<std::uint64_t>(out, t.size());
    for (double v : t) put_double(out, v);
  }
  return out;
}

TaggerModel TaggerModel::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) throw ParseError("not a tagger model file");
  if (r.get<std::uint32_t>() != kModelVersion) throw ParseError("unsupported tagger model version");
  r.get<std::uint32_t>();
  const auto header_len = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tagger model header: ") + e.what());
  }

  TaggerHyperparams hp;
  try {
    const auto& h = header.at("hyperparams");
    hp.dim = h.at("dim");
    hp.rows = h.at("rows");
    hp.hash_seeds = h.at("hash_seeds");
    hp.window = h.at("window");
    hp.depth = h.at("depth");
    hp.hidden = h.at("hidden");
    hp.learning_rate = h.at("learning_rate");
    hp.batch_size = h.at("batch_size");
    hp.epochs = h.at("epochs");
    hp.seed = h.at("seed");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tagger model header: ") + e.what());
  }
  TaggerModel model(hp, TagInventory(header.at("labels").get<std::vector<std::string>>()));
  for (auto t : model.weights_.tensors()) {
    if (r.get<std::uint64_t>() != t.size()) throw ParseError("tagger model tensor shape mismatch");
    for (double& v : t) v = std::bit_cast<double>(r.get<std::uint64_t>());
  }
  if (!r.done()) throw ParseError("trailing bytes in tagger model file");
  return model;
}

void TaggerModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

TaggerModel TaggerModel::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace projner
