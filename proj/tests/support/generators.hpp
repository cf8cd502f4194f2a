#pragma once

// Seeded random generators for property tests.

#include <string>
#include <vector>

#include "projner/aligner.hpp"
#include "projner/bilou.hpp"
#include "projner/random.hpp"

namespace gen {

inline std::string word(projner::Rng& rng, const std::string& prefix, std::size_t vocab) {
  return prefix + std::to_string(rng.below(vocab));
}

inline std::vector<std::string> sentence(projner::Rng& rng, const std::string& prefix, std::size_t vocab,
                                         std::size_t max_len) {
  std::vector<std::string> out(1 + rng.below(max_len));
  for (auto& w : out) w = word(rng, prefix, vocab);
  return out;
}

inline projner::ParallelCorpus random_corpus(projner::Rng& rng, std::size_t max_pairs, std::size_t max_len,
                                             std::size_t vocab) {
  std::vector<projner::SentencePair> pairs(1 + rng.below(max_pairs));
  for (auto& p : pairs) {
    p.source = sentence(rng, "e", vocab, max_len);
    p.target = sentence(rng, "f", vocab, max_len);
  }
  return projner::ParallelCorpus(std::move(pairs));
}

// Disjoint labelled ranges over n tokens, sorted by start.
inline std::vector<projner::LabeledRange> disjoint_spans(projner::Rng& rng, std::size_t n,
                                                         const std::vector<std::string>& labels) {
  std::vector<projner::LabeledRange> out;
  std::size_t i = 0;
  while (i < n) {
    if (rng.below(3) == 0) {
      const std::size_t len = 1 + rng.below(std::min<std::size_t>(4, n - i));
      out.push_back({i, i + len - 1, labels[rng.below(labels.size())]});
      i += len;
    } else {
      ++i;
    }
  }
  return out;
}

inline projner::AlignmentLinks random_links(projner::Rng& rng, std::size_t max_index, std::size_t max_links) {
  projner::AlignmentLinks links;
  const std::size_t n = rng.below(max_links + 1);
  for (std::size_t k = 0; k < n; ++k) links.insert({rng.below(max_index), rng.below(max_index)});
  return links;
}

}  // namespace gen
