#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "projner/bilou.hpp"
#include "projner/projection.hpp"

namespace projner {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct TaggerHyperparams {
  std::size_t dim = 64;         // embedding and context width d
  std::size_t rows = 4096;      // Bloom table rows r
  std::size_t hash_seeds = 3;   // k, at most kMaxHashSeeds
  std::size_t window = 1;       // w: each layer sees 2w+1 positions
  std::size_t depth = 2;        // c stacked context layers
  std::size_t hidden = 64;      // width of the per-token state features
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;       // weight init and batch shuffling

  friend bool operator==(const TaggerHyperparams&, const TaggerHyperparams&) = default;
};

inline constexpr std::size_t kMaxHashSeeds = 8;

// Fixed FNV-1a seeds for the Bloom hashes.
inline constexpr std::uint64_t kBloomSeeds[kMaxHashSeeds] = {
    0x9E3779B97F4A7C15ULL, 0xC2B2AE3D27D4EB4FULL, 0x165667B19E3779F9ULL, 0xD6E8FEB86659FD93ULL,
    0xFF51AFD7ED558CCDULL, 0xC4CEB9FE1A85EC53ULL, 0x94D049BB133111EBULL, 0xBF58476D1CE4E5B9ULL,
};

// Seeded 64-bit FNV-1a: the seed's 8 little-endian bytes, then the UTF-8
// surface bytes.
std::uint64_t bloom_hash(std::string_view surface, std::uint64_t seed);

// All trainable tensors. Gradients share this layout.
struct TaggerWeights {
  Matrix embeddings;                       // r x d
  std::vector<Matrix> conv;                // per layer: d x (2w+1)d
  std::vector<std::vector<double>> conv_bias;
  Matrix projection;                       // hidden x d
  std::vector<double> projection_bias;
  Matrix actions;                          // |A| x hidden
  std::vector<double> action_bias;

  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  TaggerWeights zeros_like() const;

  friend bool operator==(const TaggerWeights&, const TaggerWeights&) = default;
};

struct TransitionState {
  std::size_t current = 0;
  std::optional<std::size_t> previous;
  std::optional<std::size_t> last_entity_start;
};

class TaggerModel {
 public:
  TaggerModel() = default;
  // Random initialisation from hyperparams.seed. Throws PreconditionError for
  // inconsistent hyperparameters.
  TaggerModel(TaggerHyperparams hyperparams, TagInventory inventory);

  const TaggerHyperparams& hyperparams() const { return hp_; }
  TaggerHyperparams& hyperparams() { return hp_; }
  const TagInventory& inventory() const { return inventory_; }
  TaggerWeights& weights() { return weights_; }
  const TaggerWeights& weights() const { return weights_; }

  std::vector<std::size_t> bloom_rows(std::string_view surface) const;
  std::vector<double> bloom_embed(std::string_view surface) const;
  Matrix embed(const std::vector<std::string>& tokens) const;

  // Stacked residual window layers; output has the input's shape.
  Matrix encode_context(const Matrix& token_vectors) const;
  // Per-token state features (dense layer over contextual vectors).
  Matrix project_tokens(const Matrix& contextual) const;
  // Sum of projected rows at current, previous and last_entity_start.
  std::vector<double> state_features(const Matrix& projected, const TransitionState& state) const;
  std::vector<double> action_scores(const std::vector<double>& features) const;
  // Softmax restricted to the mask; masked entries are exactly 0. Throws
  // PreconditionError when the mask is empty.
  std::vector<double> score_actions(const std::vector<double>& features, const std::vector<bool>& mask) const;

  // Greedy left-to-right decoding; ties go to the lower action index.
  std::vector<std::size_t> greedy_parse(const std::vector<std::string>& tokens) const;
  // Same, from externally provided contextual token vectors (n x d).
  std::vector<std::size_t> greedy_parse_vectors(const Matrix& contextual) const;

  std::vector<TokenSpan> tag(const TokenizedSentence& sentence) const;

  void save(const std::filesystem::path& path) const;
  static TaggerModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static TaggerModel deserialize(std::string_view bytes);

 private:
  TaggerHyperparams hp_;
  TagInventory inventory_;
  TaggerWeights weights_;
};

// Softmax over the entries allowed by the mask; the others are exactly 0.
// Throws PreconditionError when nothing is allowed.
std::vector<double> masked_softmax(const std::vector<double>& scores, const std::vector<bool>& mask);

std::optional<std::size_t> argmax_masked(const std::vector<double>& probs, const std::vector<bool>& mask);

}  // namespace projner
