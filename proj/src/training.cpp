#include "projner/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "projner/error.hpp"
#include "projner/random.hpp"

namespace projner {

GoldSequence gold_sequence(const AnnotatedSentence& sentence, const TagInventory& inventory) {
  std::vector<LabeledRange> ranges;
  for (const auto& s : sentence.spans) ranges.push_back(LabeledRange{s.first, s.last, s.label});
  return GoldSequence{sentence.tokens.surfaces(), encode_actions(sentence.tokens.size(), ranges, inventory)};
}

std::vector<GoldSequence> gold_sequences(const std::vector<AnnotatedSentence>& sentences,
                                         const TagInventory& inventory) {
  std::vector<GoldSequence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (!s.tokens.tokens.empty()) out.push_back(gold_sequence(s, inventory));
  }
  return out;
}

TagInventory inventory_for(const std::vector<const std::vector<AnnotatedSentence>*>& datasets) {
  std::set<std::string> labels;
  for (const auto* data : datasets) {
    for (const auto& s : *data) {
      for (const auto& span : s.spans) labels.insert(span.label);
    }
  }
  return TagInventory(std::vector<std::string>(labels.begin(), labels.end()));
}

double sentence_loss(const TaggerModel& model, const GoldSequence& gold, TaggerWeights* gradient) {
  const auto& hp = model.hyperparams();
  const auto& W = model.weights();
  const auto& inv = model.inventory();
  const std::size_t n = gold.tokens.size();
  const std::size_t d = hp.dim;
  const std::size_t h = hp.hidden;
  const std::size_t na = inv.action_count();
  const auto w = static_cast<std::ptrdiff_t>(hp.window);
  const std::size_t depth = W.conv.size();
  if (n == 0) return 0.0;
  if (gold.actions.size() != n) throw ShapeError("gold action count differs from token count");

  // Forward, keeping every intermediate needed by the backward pass.
  std::vector<std::vector<std::size_t>> rows(n);
  std::vector<Matrix> xs(depth + 1);
  std::vector<Matrix> zs(depth);
  xs[0] = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = model.bloom_rows(gold.tokens[i]);
    for (std::size_t r : rows[i]) {
      const double* e = W.embeddings.row(r);
      for (std::size_t k = 0; k < d; ++k) xs[0](i, k) += e[k];
    }
  }
  for (std::size_t l = 0; l < depth; ++l) {
    zs[l] = Matrix(n, d);
    xs[l + 1] = xs[l];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t out = 0; out < d; ++out) {
        double z = W.conv_bias[l][out];
        const double* wrow = W.conv[l].row(out);
        for (std::ptrdiff_t o = -w; o <= w; ++o) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + o;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
          const double* x = xs[l].row(static_cast<std::size_t>(src));
          const double* wk = wrow + static_cast<std::size_t>(o + w) * d;
          for (std::size_t k = 0; k < d; ++k) z += wk[k] * x[k];
        }
        zs[l](i, out) = z;
        xs[l + 1](i, out) += std::max(0.0, z);
      }
    }
  }
  const Matrix& ctx = xs[depth];
  const Matrix projected = model.project_tokens(ctx);

  double loss = 0.0;
  Matrix d_projected(n, h);
  std::optional<std::size_t> entity_start;
  for (std::size_t t = 0; t < n; ++t) {
    const TransitionState state{t, t > 0 ? std::optional<std::size_t>(t - 1) : std::nullopt, entity_start};
    const auto mask =
        valid_actions(t > 0 ? std::optional<std::size_t>(gold.actions[t - 1]) : std::nullopt, t + 1 == n, inv);
    const std::size_t target = gold.actions[t];
    if (!mask[target]) {
      throw IntegrityError("gold action " + inv.name(target) + " is invalid at position " + std::to_string(t));
    }
    const auto features = model.state_features(projected, state);
    const auto probs = model.score_actions(features, mask);
    loss -= std::log(probs[target]);

    const BilouTag tag = inv.tag_of(target);
    const std::optional<std::size_t> state_entity = entity_start;
    if (tag == BilouTag::Begin || tag == BilouTag::Unit) entity_start = t;
    if (!gradient) continue;

    // d loss / d scores = p - onehot over valid actions; masked entries are 0.
    std::vector<double> d_features(h, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
      if (!mask[a]) continue;
      const double g = probs[a] - (a == target ? 1.0 : 0.0);
      if (g == 0.0) continue;
      gradient->action_bias[a] += g;
      double* gw = gradient->actions.row(a);
      const double* aw = W.actions.row(a);
      for (std::size_t k = 0; k < h; ++k) {
        if (features[k] <= 0.0) continue;
        gw[k] += g * features[k];
        d_features[k] += g * aw[k];
      }
    }
    for (auto idx : {std::optional<std::size_t>(t), state.previous, state_entity}) {
      if (!idx) continue;
      double* dp = d_projected.row(*idx);
      for (std::size_t k = 0; k < h; ++k) dp[k] += d_features[k];
    }
  }
  if (!gradient) return loss;

  // Projection layer.
  Matrix d_x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* dp = d_projected.row(i);
    const double* x = ctx.row(i);
    double* dx = d_x.row(i);
    for (std::size_t o = 0; o < h; ++o) {
      if (dp[o] == 0.0) continue;
      gradient->projection_bias[o] += dp[o];
      double* gw = gradient->projection.row(o);
      const double* pw = W.projection.row(o);
      for (std::size_t k = 0; k < d; ++k) {
        gw[k] += dp[o] * x[k];
        dx[k] += dp[o] * pw[k];
      }
    }
  }

  // Residual window layers, last to first.
  for (std::size_t l = depth; l-- > 0;) {
    Matrix d_prev = d_x;  // residual path
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t out = 0; out < d; ++out) {
        if (zs[l](i, out) <= 0.0) continue;
        const double g = d_x(i, out);
        if (g == 0.0) continue;
        gradient->conv_bias[l][out] += g;
        double* gw = gradient->conv[l].row(out);
        const double* wrow = W.conv[l].row(out);
        for (std::ptrdiff_t o = -w; o <= w; ++o) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + o;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
          const double* x = xs[l].row(static_cast<std::size_t>(src));
          double* dx = d_prev.row(static_cast<std::size_t>(src));
          const std::size_t base = static_cast<std::size_t>(o + w) * d;
          for (std::size_t k = 0; k < d; ++k) {
            gw[base + k] += g * x[k];
            dx[k] += g * wrow[base + k];
          }
        }
      }
    }
    d_x = std::move(d_prev);
  }

  // Embedding rows; a row hit by several hashes receives each contribution.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r : rows[i]) {
      double* ge = gradient->embeddings.row(r);
      for (std::size_t k = 0; k < d; ++k) ge[k] += d_x(i, k);
    }
  }
  return loss;
}

double token_accuracy(const TaggerModel& model, const std::vector<GoldSequence>& data) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& g : data) {
    const auto predicted = model.greedy_parse(g.tokens);
    for (std::size_t t = 0; t < predicted.size(); ++t) correct += predicted[t] == g.actions[t];
    total += g.tokens.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

class Adam {
 public:
  explicit Adam(const TaggerWeights& shape) : m_(shape.zeros_like()), v_(shape.zeros_like()) {}

  void step(TaggerWeights& weights, TaggerWeights& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto ws = weights.tensors();
    auto gs = grad.tensors();
    auto ms = m_.tensors();
    auto vs = v_.tensors();
    for (std::size_t k = 0; k < ws.size(); ++k) {
      for (std::size_t i = 0; i < ws[k].size(); ++i) {
        const double g = gs[k][i];
        ms[k][i] = kBeta1 * ms[k][i] + (1.0 - kBeta1) * g;
        vs[k][i] = kBeta2 * vs[k][i] + (1.0 - kBeta2) * g * g;
        ws[k][i] -= lr * (ms[k][i] / c1) / (std::sqrt(vs[k][i] / c2) + kEpsilon);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;
  TaggerWeights m_;
  TaggerWeights v_;
  std::size_t t_ = 0;
};

}  // namespace

TrainingResult train_tagger(TaggerModel model, const std::vector<AnnotatedSentence>& train_set,
                            const std::vector<AnnotatedSentence>& validation_set) {
  const auto train = gold_sequences(train_set, model.inventory());
  const auto validation = gold_sequences(validation_set, model.inventory());
  if (train.empty() || validation.empty()) throw PreconditionError("training and validation sets must be nonempty");
  const auto hp = model.hyperparams();

  std::size_t train_tokens = 0;
  for (const auto& g : train) train_tokens += g.tokens.size();

  TrainingResult result;
  result.model = model;
  result.best_validation_accuracy = -1.0;

  Rng rng(splitmix64(hp.seed ^ 0x7261696E73656564ULL));
  Adam adam(model.weights());
  TaggerWeights grad = model.weights().zeros_like();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> losses(train.size());

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < order.size(); b += hp.batch_size) {
      const std::size_t e = std::min(order.size(), b + hp.batch_size);
      for (auto t : grad.tensors()) std::fill(t.begin(), t.end(), 0.0);
      std::size_t batch_tokens = 0;
      for (std::size_t k = b; k < e; ++k) {
        losses[order[k]] = sentence_loss(model, train[order[k]], &grad);
        batch_tokens += train[order[k]].tokens.size();
      }
      const double scale = 1.0 / static_cast<double>(batch_tokens);
      for (auto t : grad.tensors()) {
        for (double& g : t) g *= scale;
      }
      adam.step(model.weights(), grad, hp.learning_rate);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(train_tokens);
    record.validation_accuracy = token_accuracy(model, validation);
    result.history.push_back(record);
    if (record.validation_accuracy > result.best_validation_accuracy) {
      result.best_validation_accuracy = record.validation_accuracy;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

}  // namespace projner
