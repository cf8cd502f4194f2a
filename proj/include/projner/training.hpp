#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "projner/projection.hpp"
#include "projner/tagger.hpp"

namespace projner {

// Tokens of a sentence with their static-oracle (gold) actions.
struct GoldSequence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> actions;
};

GoldSequence gold_sequence(const AnnotatedSentence& sentence, const TagInventory& inventory);
std::vector<GoldSequence> gold_sequences(const std::vector<AnnotatedSentence>& sentences,
                                         const TagInventory& inventory);

// Sorted label inventory over all spans of the given datasets.
TagInventory inventory_for(const std::vector<const std::vector<AnnotatedSentence>*>& datasets);

// Summed negative log-likelihood of the gold actions under teacher forcing.
// When `gradient` is given (shaped like the model weights) the gradient of the
// returned loss is added to it. Throws IntegrityError if a gold action is
// masked.
double sentence_loss(const TaggerModel& model, const GoldSequence& gold, TaggerWeights* gradient = nullptr);

// Fraction of tokens whose greedily predicted action equals the gold action.
double token_accuracy(const TaggerModel& model, const std::vector<GoldSequence>& data);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // mean per-token loss over the epoch
  double validation_accuracy = 0;
};

struct TrainingResult {
  TaggerModel model;  // weights of the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation_accuracy = 0;
};

// Minibatch training with Adam updates, seeded shuffling and best-validation
// selection; all settings come from model.hyperparams(). Throws
// PreconditionError on empty datasets.
TrainingResult train_tagger(TaggerModel model, const std::vector<AnnotatedSentence>& train_set,
                            const std::vector<AnnotatedSentence>& validation_set);

}  // namespace projner
