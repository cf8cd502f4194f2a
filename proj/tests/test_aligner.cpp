#include <doctest.h>

#include "oracles/ibm_oracle.hpp"
#include "projner/aligner.hpp"
#include "projner/error.hpp"
#include "support/generators.hpp"

using namespace projner;

namespace {

ParallelCorpus house_book() {
  return ParallelCorpus::parse("the house ||| das haus\nthe book ||| das buch\na book ||| ein buch\n");
}

std::vector<oracle::Pair> to_oracle(const ParallelCorpus& corpus) {
  std::vector<oracle::Pair> out;
  for (const auto& p : corpus.pairs()) out.push_back({p.source, p.target});
  return out;
}

std::string library_word(const std::string& e) { return e.empty() ? std::string(kNullWord) : e; }

// Copy corpus: 100 random sentences over 20 types, each paired with itself.
ParallelCorpus copy_corpus(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SentencePair> pairs;
  for (int k = 0; k < 100; ++k) {
    std::vector<std::string> s(3 + rng.below(6));
    for (auto& w : s) w = "w" + std::to_string(rng.below(20));
    pairs.push_back({s, s});
  }
  return ParallelCorpus(std::move(pairs));
}

// Targets reverse the source; each position has its own vocabulary.
ParallelCorpus reverse_corpus() {
  Rng rng(11);
  std::vector<SentencePair> pairs;
  for (int k = 0; k < 60; ++k) {
    std::vector<std::string> src, tgt;
    for (int p = 0; p < 3; ++p) src.push_back(std::string(1, static_cast<char>('a' + p)) + std::to_string(rng.below(4)));
    for (int p = 2; p >= 0; --p) tgt.push_back("T" + src[static_cast<std::size_t>(p)]);
    pairs.push_back({src, tgt});
  }
  return ParallelCorpus(std::move(pairs));
}

}  // namespace

TEST_CASE("IBM-1 matches the brute-force EM on the house/book corpus") {
  const auto corpus = house_book();
  const auto result = train_ibm1(corpus, 5);
  std::vector<double> oracle_ll;
  const auto expected = oracle::ibm1(to_oracle(corpus), 5, &oracle_ll);
  for (const auto& [e, row] : expected) {
    for (const auto& [f, p] : row) CHECK(std::abs(result.table.prob(library_word(e), f) - p) < 1e-9);
  }
  REQUIRE(result.log_likelihood.size() == oracle_ll.size());
  for (std::size_t k = 0; k < oracle_ll.size(); ++k) CHECK(std::abs(result.log_likelihood[k] - oracle_ll[k]) < 1e-9);
  CHECK(result.table.argmax("book") == "buch");
  CHECK(result.table.argmax("the") == "das");
  CHECK(result.table.max_normalization_error() < 1e-9);
}

TEST_CASE("IBM-2 matches the brute-force EM on the house/book corpus") {
  const auto corpus = house_book();
  const auto ibm1 = train_ibm1(corpus, 5);
  const auto result = train_ibm2(corpus, 5, ibm1.table);
  std::vector<double> oracle_ll;
  const auto expected = oracle::ibm2(to_oracle(corpus), 5, oracle::ibm1(to_oracle(corpus), 5), &oracle_ll);
  for (const auto& [e, row] : expected.t) {
    for (const auto& [f, p] : row) CHECK(std::abs(result.model.lexicon.prob(library_word(e), f) - p) < 1e-9);
  }
  for (const auto& [key, p] : expected.a) {
    const auto [i, j, l, m] = key;
    CHECK(std::abs(result.model.distortion.prob(i, j, l, m) - p) < 1e-9);
  }
  CHECK(std::abs(result.model.null_prob - expected.p0) < 1e-9);
  for (std::size_t k = 0; k < oracle_ll.size(); ++k) CHECK(std::abs(result.log_likelihood[k] - oracle_ll[k]) < 1e-9);
}

TEST_CASE("EM matches the oracle on random corpora") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const auto corpus = gen::random_corpus(rng, 8, 5, 6);
    const auto ibm1 = train_ibm1(corpus, 4);
    const auto t = oracle::ibm1(to_oracle(corpus), 4);
    for (const auto& [e, row] : t) {
      for (const auto& [f, p] : row) CHECK(std::abs(ibm1.table.prob(library_word(e), f) - p) < 1e-9);
    }
    const auto ibm2 = train_ibm2(corpus, 4, ibm1.table);
    const auto m2 = oracle::ibm2(to_oracle(corpus), 4, t);
    for (const auto& [key, p] : m2.a) {
      const auto [i, j, l, m] = key;
      CHECK(std::abs(ibm2.model.distortion.prob(i, j, l, m) - p) < 1e-9);
    }
    CHECK(std::abs(ibm2.model.null_prob - m2.p0) < 1e-9);
  }
}

TEST_CASE("single pair, one iteration") {
  const auto corpus = ParallelCorpus::parse("a ||| b\n");
  const auto result = train_ibm1(corpus, 1);
  CHECK(result.table.prob("a", "b") == 1.0);
  CHECK(result.table.prob(kNullWord, "b") == 1.0);
}

TEST_CASE("training preconditions") {
  CHECK_THROWS_AS(train_ibm1(ParallelCorpus{}, 5), PreconditionError);
  CHECK_THROWS_AS(train_ibm1(house_book(), 0), PreconditionError);
  const auto table = train_ibm1(house_book(), 2).table;
  CHECK_THROWS_AS(train_ibm2(house_book(), 0, table), PreconditionError);
  TranslationTable broken = table;
  broken.rows()[1][0].prob += 0.5;
  CHECK_THROWS_AS(train_ibm2(house_book(), 2, broken), PreconditionError);
  CHECK_THROWS_AS(ParallelCorpus({{{"a"}, {}}}), PreconditionError);
  CHECK_THROWS_AS(ParallelCorpus({{{"a", "b", "c"}, {"x"}}}, 2), PreconditionError);
  CHECK_THROWS_AS(ParallelCorpus::parse("a b | c\n"), ParseError);
}

TEST_CASE("log-likelihood is non-decreasing and tables stay normalized") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto corpus = gen::random_corpus(rng, 30, 8, 12);
    const auto ibm1 = train_ibm1(corpus, 6);
    for (std::size_t k = 1; k < ibm1.log_likelihood.size(); ++k) {
      CHECK(ibm1.log_likelihood[k] >= ibm1.log_likelihood[k - 1] - 1e-9);
    }
    const auto ibm2 = train_ibm2(corpus, 6, ibm1.table);
    for (std::size_t k = 1; k < ibm2.log_likelihood.size(); ++k) {
      CHECK(ibm2.log_likelihood[k] >= ibm2.log_likelihood[k - 1] - 1e-9);
    }
    CHECK(ibm2.model.lexicon.max_normalization_error() < 1e-9);
    CHECK(ibm2.model.distortion.max_normalization_error() < 1e-9);
    CHECK(ibm2.log_likelihood.back() == doctest::Approx(corpus_log_likelihood(ibm2.model, corpus)));
  }
}

TEST_CASE("copy corpus gives identity alignments") {
  const auto corpus = copy_corpus(1);
  const auto ibm1 = train_ibm1(corpus, 5);
  for (std::size_t e = 0; e < 20; ++e) {
    const std::string w = "w" + std::to_string(e);
    if (ibm1.table.source_vocab().find(w)) CHECK(ibm1.table.argmax(w) == w);
  }
  const auto model = train_ibm2(corpus, 5, ibm1.table).model;
  const auto links = viterbi_align(model, {"w1", "w2", "w3"}, {"w1", "w2", "w3"});
  CHECK(links == AlignmentLinks{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("reverse corpus concentrates distortion on the mirrored position") {
  const auto corpus = reverse_corpus();
  const auto ibm1 = train_ibm1(corpus, 5);
  const auto model = train_ibm2(corpus, 5, ibm1.table).model;
  for (std::size_t j = 0; j < 3; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (model.distortion.prob(i, j, 3, 3) > model.distortion.prob(best, j, 3, 3)) best = i;
    }
    CHECK(best == 2 - j);
  }
  const auto& p = corpus.pairs()[0];
  CHECK(viterbi_align(model, p.source, p.target) == AlignmentLinks{{2, 0}, {1, 1}, {0, 2}});
}

TEST_CASE("unseen target words stay unaligned") {
  auto model = train_ibm2(house_book(), 3, train_ibm1(house_book(), 3).table).model;
  // Every lexical score of "zzz" is the floor, so the position prior decides.
  model.null_prob = 0.6;
  const auto links = viterbi_align(model, {"the", "book"}, {"das", "zzz"});
  CHECK(links == AlignmentLinks{{0, 0}});
}

TEST_CASE("Viterbi links: at most one per target, within bounds") {
  Rng rng(9);
  const auto corpus = gen::random_corpus(rng, 40, 10, 8);
  const auto model = train_ibm2(corpus, 3, train_ibm1(corpus, 3).table).model;
  const auto all1 = viterbi_align_all(model, corpus, 1);
  const auto all3 = viterbi_align_all(model, corpus, 3);
  CHECK(all1 == all3);
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    std::set<std::size_t> targets;
    for (const auto& l : all1[k]) {
      CHECK(l.source < corpus.pairs()[k].source.size());
      CHECK(l.target < corpus.pairs()[k].target.size());
      CHECK(targets.insert(l.target).second);
    }
  }
}

TEST_CASE("training is independent of the worker count") {
  Rng rng(77);
  const auto corpus = gen::random_corpus(rng, 50, 10, 10);
  TrainingOptions one, four;
  four.workers = 4;
  const auto a1 = train_ibm1(corpus, 4, one);
  const auto a4 = train_ibm1(corpus, 4, four);
  CHECK(a1.log_likelihood == a4.log_likelihood);
  const auto b1 = train_ibm2(corpus, 4, a1.table, one);
  const auto b4 = train_ibm2(corpus, 4, a4.table, four);
  CHECK(b1.log_likelihood == b4.log_likelihood);
  CHECK(b1.model.distortion.values() == b4.model.distortion.values());
  CHECK(b1.model.null_prob == b4.model.null_prob);
}

TEST_CASE("diagonal prior favours the diagonal") {
  TrainingOptions options;
  options.diagonal_prior = true;
  const auto corpus = ParallelCorpus::parse("a b c ||| x y z\n");
  const auto ibm1 = train_ibm1(corpus, 1);
  const auto model = train_ibm2(corpus, 1, ibm1.table, options).model;
  CHECK(model.position_prob(0, 0, 3, 3) > model.position_prob(2, 0, 3, 3));
  CHECK(model.diagonal_prior);
}

TEST_CASE("long sentences share the capped bucket") {
  std::vector<std::string> longer(60, "a");
  longer[59] = "b";
  const ParallelCorpus corpus({{longer, longer}});
  const auto model = train_ibm2(corpus, 2, train_ibm1(corpus, 2).table).model;
  CHECK(model.distortion.buckets().size() == 1);
  CHECK(model.distortion.buckets()[0] == std::pair<std::size_t, std::size_t>{kDistortionLengthCap, kDistortionLengthCap});
  double total = 0;
  for (std::size_t i = 0; i < 60; ++i) total += model.position_prob(i, 59, 60, 60);
  CHECK(total + model.position_prob(std::nullopt, 59, 60, 60) == doctest::Approx(1.0));
}

TEST_CASE("Pharaoh parse and emit") {
  CHECK(parse_pharaoh("0-0 1-2 2-1") == AlignmentLinks{{0, 0}, {1, 2}, {2, 1}});
  CHECK(parse_pharaoh("").empty());
  CHECK(parse_pharaoh("0-0 0-0") == AlignmentLinks{{0, 0}});
  CHECK(emit_pharaoh({{1, 2}, {0, 0}}) == "0-0 1-2");
  CHECK(emit_pharaoh({}).empty());
  CHECK_THROWS_AS(parse_pharaoh("0-0 1x2"), ParseError);
  CHECK_THROWS_AS(parse_pharaoh("0-"), ParseError);
  CHECK_THROWS_AS(parse_pharaoh("-1-2"), ParseError);
  try {
    parse_pharaoh("0-0 1-a");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("column 5") != std::string::npos);
  }
}

TEST_CASE("Pharaoh round trip") {
  Rng rng(31);
  for (int k = 0; k < 300; ++k) {
    const auto links = gen::random_links(rng, 30, 20);
    const std::string line = emit_pharaoh(links);
    CHECK(parse_pharaoh(line) == links);
    CHECK(emit_pharaoh(parse_pharaoh(line)) == line);
  }
}

TEST_CASE("model JSON round trip") {
  const auto corpus = house_book();
  const auto model = train_ibm2(corpus, 3, train_ibm1(corpus, 3).table).model;
  const auto restored = alignment_model_from_json(nlohmann::json::parse(to_json(model).dump()));
  CHECK(restored.null_prob == model.null_prob);
  CHECK(restored.distortion.values() == model.distortion.values());
  for (const auto& p : corpus.pairs()) CHECK(viterbi_align(restored, p.source, p.target) == viterbi_align(model, p.source, p.target));
  CHECK(corpus_log_likelihood(restored, corpus) == corpus_log_likelihood(model, corpus));
}
