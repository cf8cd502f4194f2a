#pragma once

// Reference scorers: a full confusion matrix over label strings for token
// sequences, and pairwise interval intersection for character spans.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Counts {
  long tp = 0, fp = 0, fn = 0;
  bool operator==(const Counts&) const = default;
};

inline std::map<std::string, Counts> confusion_counts(const std::vector<std::vector<std::string>>& gold,
                                                      const std::vector<std::vector<std::string>>& pred) {
  std::map<std::pair<std::string, std::string>, long> matrix;
  std::set<std::string> labels;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      matrix[{gold[s][i], pred[s][i]}]++;
      labels.insert(gold[s][i]);
      labels.insert(pred[s][i]);
    }
  }
  std::map<std::string, Counts> out;
  for (const auto& c : labels) {
    if (c == "O") continue;
    Counts k;
    for (const auto& [cell, n] : matrix) {
      const auto& [g, p] = cell;
      if (g == c && p == c) k.tp += n;
      if (g != c && p == c) k.fp += n;
      if (g == c && p != c) k.fn += n;
    }
    out[c] = k;
  }
  return out;
}

struct Interval {
  std::string label;
  long start = 0, end = 0;
};

inline long overlap(const Interval& a, const Interval& b) {
  return std::max(0L, std::min(a.end, b.end) - std::max(a.start, b.start));
}

// Per label: tp = same-label gold/pred overlap, fn = gold length minus tp,
// fp = pred length minus tp. Spans within one side must be disjoint.
inline std::map<std::string, Counts> interval_counts(const std::vector<std::vector<Interval>>& gold,
                                                     const std::vector<std::vector<Interval>>& pred) {
  std::map<std::string, Counts> out;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::map<std::string, long> tp, gold_len, pred_len;
    for (const auto& g : gold[s]) {
      gold_len[g.label] += g.end - g.start;
      for (const auto& p : pred[s]) {
        if (p.label == g.label) tp[g.label] += overlap(g, p);
      }
    }
    for (const auto& p : pred[s]) pred_len[p.label] += p.end - p.start;
    for (const auto& [label, n] : gold_len) {
      out[label].tp += tp[label];
      out[label].fn += n - tp[label];
    }
    for (const auto& [label, n] : pred_len) {
      out[label].fp += n - tp[label];
      out[label];
    }
  }
  return out;
}

}  // namespace oracle
