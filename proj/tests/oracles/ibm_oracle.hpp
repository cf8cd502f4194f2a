#pragma once

// Textbook IBM-1 / IBM-2 EM written directly over string-keyed maps, with no
// shared code with the library trainer. Used as a reference on toy corpora.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

using Words = std::vector<std::string>;
using Pair = std::pair<Words, Words>;
// t[e][f]; e == "" is NULL.
using Table = std::map<std::string, std::map<std::string, double>>;

inline const std::string kNull;

inline Table ibm1_uniform_init(const std::vector<Pair>& corpus) {
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& [src, tgt] : corpus) {
    for (const auto& f : tgt) {
      seen[kNull].insert(f);
      for (const auto& e : src) seen[e].insert(f);
    }
  }
  Table t;
  for (const auto& [e, fs] : seen) {
    for (const auto& f : fs) t[e][f] = 1.0 / static_cast<double>(fs.size());
  }
  return t;
}

// Runs `iterations` EM steps; ll[k] is the log-likelihood under the table
// after k iterations.
inline Table ibm1(const std::vector<Pair>& corpus, int iterations, std::vector<double>* ll = nullptr) {
  Table t = ibm1_uniform_init(corpus);
  auto likelihood = [&] {
    double total = 0;
    for (const auto& [src, tgt] : corpus) {
      for (const auto& f : tgt) {
        double z = t[kNull][f];
        for (const auto& e : src) z += t[e][f];
        total += std::log(z / static_cast<double>(src.size() + 1));
      }
    }
    return total;
  };
  if (ll) ll->push_back(likelihood());
  for (int it = 0; it < iterations; ++it) {
    Table count;
    for (const auto& [src, tgt] : corpus) {
      for (const auto& f : tgt) {
        double z = t[kNull][f];
        for (const auto& e : src) z += t[e][f];
        count[kNull][f] += t[kNull][f] / z;
        for (const auto& e : src) count[e][f] += t[e][f] / z;
      }
    }
    for (auto& [e, row] : count) {
      double total = 0;
      for (const auto& [f, c] : row) total += c;
      for (const auto& [f, c] : row) t[e][f] = c / total;
    }
    if (ll) ll->push_back(likelihood());
  }
  return t;
}

struct Ibm2 {
  Table t;
  // a[(i, j, l, m)] for real source positions.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, double> a;
  double p0 = 0;
};

// IBM-2 with a single NULL probability p0: P(i | j, l, m) = (1 - p0) a(i|j,l,m),
// P(NULL) = p0. Uniform a, p0 = sum(m / (l + 1)) / sum(m), t from `init`.
inline Ibm2 ibm2(const std::vector<Pair>& corpus, int iterations, const Table& init,
                 std::vector<double>* ll = nullptr) {
  Ibm2 model;
  model.t = init;
  double implied = 0, tokens = 0;
  for (const auto& [src, tgt] : corpus) {
    const std::size_t l = src.size(), m = tgt.size();
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < l; ++i) model.a[{i, j, l, m}] = 1.0 / static_cast<double>(l);
    }
    implied += static_cast<double>(m) / static_cast<double>(l + 1);
    tokens += static_cast<double>(m);
  }
  model.p0 = implied / tokens;

  auto score = [&](const std::string& e, const std::string& f, std::size_t i, std::size_t j, std::size_t l,
                   std::size_t m) { return model.t[e][f] * (1 - model.p0) * model.a[{i, j, l, m}]; };
  auto likelihood = [&] {
    double total = 0;
    for (const auto& [src, tgt] : corpus) {
      const std::size_t l = src.size(), m = tgt.size();
      for (std::size_t j = 0; j < m; ++j) {
        double z = model.t[kNull][tgt[j]] * model.p0;
        for (std::size_t i = 0; i < l; ++i) z += score(src[i], tgt[j], i, j, l, m);
        total += std::log(z);
      }
    }
    return total;
  };
  if (ll) ll->push_back(likelihood());
  for (int it = 0; it < iterations; ++it) {
    Table count;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, double> acount;
    double null_mass = 0;
    for (const auto& [src, tgt] : corpus) {
      const std::size_t l = src.size(), m = tgt.size();
      for (std::size_t j = 0; j < m; ++j) {
        const double s0 = model.t[kNull][tgt[j]] * model.p0;
        double z = s0;
        for (std::size_t i = 0; i < l; ++i) z += score(src[i], tgt[j], i, j, l, m);
        count[kNull][tgt[j]] += s0 / z;
        null_mass += s0 / z;
        for (std::size_t i = 0; i < l; ++i) {
          const double post = score(src[i], tgt[j], i, j, l, m) / z;
          count[src[i]][tgt[j]] += post;
          acount[{i, j, l, m}] += post;
        }
      }
    }
    for (auto& [e, row] : count) {
      double total = 0;
      for (const auto& [f, c] : row) total += c;
      for (const auto& [f, c] : row) model.t[e][f] = c / total;
    }
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> atotal;
    for (const auto& [key, c] : acount) {
      const auto [i, j, l, m] = key;
      atotal[{j, l, m}] += c;
    }
    for (auto& [key, value] : model.a) {
      const auto [i, j, l, m] = key;
      value = acount[key] / atotal[{j, l, m}];
    }
    model.p0 = null_mass / tokens;
    if (ll) ll->push_back(likelihood());
  }
  return model;
}

}  // namespace oracle
