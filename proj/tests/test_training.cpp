#include <doctest.h>

#include <chrono>
#include <cmath>

#include "oracles/finite_difference.hpp"
#include "projner/error.hpp"
#include "projner/training.hpp"
#include "support/generators.hpp"

using namespace projner;

namespace {

TaggerHyperparams tiny(std::uint64_t seed) {
  TaggerHyperparams hp;
  hp.dim = 6;
  hp.rows = 16;
  hp.hidden = 5;
  hp.seed = seed;
  return hp;
}

AnnotatedSentence random_sentence(Rng& rng, const std::vector<std::string>& labels, std::size_t max_len) {
  AnnotatedSentence s;
  const auto words = gen::sentence(rng, "w", 25, max_len);
  std::string text;
  for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
  s.tokens = tokenize(text);
  for (const auto& r : gen::disjoint_spans(rng, s.tokens.size(), labels)) {
    s.spans.push_back(make_token_span(s.tokens, r.label, r.first, r.last));
  }
  return s;
}

// Largest |a - n| / max(|a| + |n|, 1e-7) over all parameters.
double gradient_error(TaggerModel& model, const GoldSequence& gold) {
  TaggerWeights grad = model.weights().zeros_like();
  sentence_loss(model, gold, &grad);
  auto params = model.weights().tensors();
  const auto analytic = std::as_const(grad).tensors();
  double worst = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t k = 0; k < params[t].size(); ++k) {
      // small step: a wider one can straddle a relu kink in the state features
      const double numeric =
          oracle::central_difference(params[t], k, 1e-6, [&] { return sentence_loss(model, gold); });
      const double a = analytic[t][k];
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-7));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("gold sequences follow the BILOU codec") {
  const TagInventory inv({"Drug"});
  AnnotatedSentence s;
  s.tokens = tokenize("take aspirin 100 mg");
  s.spans.push_back(make_token_span(s.tokens, "Drug", 1, 3));
  const auto g = gold_sequence(s, inv);
  CHECK(g.tokens == std::vector<std::string>{"take", "aspirin", "100", "mg"});
  CHECK(g.actions == encode_actions(4, {{1, 3, "Drug"}}, inv));
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(13);
  const std::vector<std::string> labels = {"A", "B"};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TaggerModel model(tiny(seed), TagInventory(labels));
    // Nonzero biases so the conv layers take part.
    for (auto& b : model.weights().conv_bias) {
      for (auto& v : b) v = rng.uniform(-0.5, 0.5);
    }
    const auto s = random_sentence(rng, labels, 6);
    CHECK(gradient_error(model, gold_sequence(s, model.inventory())) < 1e-4);
  }
}

TEST_CASE("masked gold actions are an integrity error") {
  const TaggerModel model(tiny(1), TagInventory({"A"}));
  GoldSequence bad{{"x", "y"}, {model.inventory().action(BilouTag::Inside, 0), 0}};
  CHECK_THROWS_AS(sentence_loss(model, bad), IntegrityError);
  GoldSequence short_actions{{"x", "y"}, {0}};
  CHECK_THROWS_AS(sentence_loss(model, short_actions), ShapeError);
}

TEST_CASE("learning rate zero leaves the weights unchanged") {
  Rng rng(2);
  const std::vector<std::string> labels = {"A"};
  std::vector<AnnotatedSentence> data;
  for (int k = 0; k < 8; ++k) data.push_back(random_sentence(rng, labels, 6));
  TaggerHyperparams hp = tiny(4);
  hp.learning_rate = 0.0;
  hp.epochs = 3;
  hp.batch_size = 3;
  const TaggerModel initial(hp, TagInventory(labels));
  const auto result = train_tagger(initial, data, data);
  CHECK(result.model.weights() == initial.weights());
  REQUIRE(result.history.size() == 3);
  CHECK(result.history[0].train_loss == result.history[1].train_loss);
  CHECK(result.history[1].train_loss == result.history[2].train_loss);
}

TEST_CASE("training is deterministic for a seed") {
  Rng rng(6);
  const std::vector<std::string> labels = {"A", "B"};
  std::vector<AnnotatedSentence> data;
  for (int k = 0; k < 12; ++k) data.push_back(random_sentence(rng, labels, 7));
  TaggerHyperparams hp = tiny(8);
  hp.epochs = 4;
  hp.batch_size = 5;
  const auto a = train_tagger(TaggerModel(hp, TagInventory(labels)), data, data);
  const auto b = train_tagger(TaggerModel(hp, TagInventory(labels)), data, data);
  CHECK(a.model.weights() == b.model.weights());
  CHECK(a.best_epoch == b.best_epoch);
  for (std::size_t k = 0; k < a.history.size(); ++k) CHECK(a.history[k].train_loss == b.history[k].train_loss);
}

TEST_CASE("a model overfit on one sentence reproduces its actions") {
  Rng rng(10);
  const std::vector<std::string> labels = {"Drug", "Dose"};
  AnnotatedSentence s;
  s.tokens = tokenize("give aspirin 100 mg twice daily");
  s.spans = {make_token_span(s.tokens, "Drug", 1, 1), make_token_span(s.tokens, "Dose", 2, 3)};
  TaggerHyperparams hp = tiny(3);
  hp.dim = 16;
  hp.rows = 64;
  hp.hidden = 16;
  hp.epochs = 60;
  hp.batch_size = 1;
  const auto result = train_tagger(TaggerModel(hp, TagInventory(labels)), {s}, {s});
  CHECK(result.model.greedy_parse(s.tokens.surfaces()) == gold_sequence(s, result.model.inventory()).actions);
  CHECK(result.model.tag(s.tokens) == s.spans);
}

TEST_CASE("best validation epoch is returned") {
  Rng rng(12);
  const std::vector<std::string> labels = {"A"};
  std::vector<AnnotatedSentence> data;
  for (int k = 0; k < 10; ++k) data.push_back(random_sentence(rng, labels, 6));
  TaggerHyperparams hp = tiny(5);
  hp.epochs = 6;
  const auto result = train_tagger(TaggerModel(hp, TagInventory(labels)), data, data);
  double best = -1;
  for (const auto& e : result.history) best = std::max(best, e.validation_accuracy);
  CHECK(result.best_validation_accuracy == best);
  CHECK(token_accuracy(result.model, gold_sequences(data, result.model.inventory())) == best);
}

TEST_CASE("empty datasets are rejected") {
  const TaggerModel model(tiny(1), TagInventory({"A"}));
  CHECK_THROWS_AS(train_tagger(model, {}, {}), PreconditionError);
}
