// Acceptance run: one PASS/FAIL line per criterion, with wall-clock limits.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "oracles/finite_difference.hpp"
#include "oracles/ibm_oracle.hpp"
#include "oracles/metrics_oracle.hpp"
#include "projner/aligner.hpp"
#include "projner/bilou.hpp"
#include "projner/error.hpp"
#include "projner/evaluation.hpp"
#include "projner/pipeline.hpp"
#include "projner/projection.hpp"
#include "projner/tagger.hpp"
#include "projner/training.hpp"
#include "support/generators.hpp"
#include "support/permutation.hpp"

using namespace projner;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.pass && secs > limit_s) {
    o.pass = false;
    o.detail = "took " + fmt("%.2f", secs) + " s";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %-28s %7.2f s (limit %g s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs, limit_s,
              o.detail.empty() ? "" : "  ", o.detail.c_str());
  std::fflush(stdout);
}

std::vector<oracle::Pair> to_oracle(const ParallelCorpus& corpus) {
  std::vector<oracle::Pair> out;
  for (const auto& p : corpus.pairs()) out.push_back({p.source, p.target});
  return out;
}

std::string library_word(const std::string& e) { return e.empty() ? std::string(kNullWord) : e; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1
Outcome split_arithmetic() {
  Outcome o;
  std::vector<AnnotatedSentence> items(16632);
  for (std::size_t k = 0; k < items.size(); ++k) items[k].tokens.text = std::to_string(k);
  const auto s = split_dataset(items, {0.8, 0.1, 0.1}, 1);
  o.require(s.train.size() == 13306 && s.validation.size() == 1663 && s.test.size() == 1663,
            "sizes " + std::to_string(s.train.size()) + "/" + std::to_string(s.validation.size()) + "/" +
                std::to_string(s.test.size()));
  return o;
}

// 2
Outcome em_monotonicity() {
  Outcome o;
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto corpus = gen::random_corpus(rng, 50, 10, 15);
    const auto ibm1 = train_ibm1(corpus, 10);
    const auto ibm2 = train_ibm2(corpus, 10, ibm1.table);
    for (const auto* ll : {&ibm1.log_likelihood, &ibm2.log_likelihood}) {
      o.require(ll->size() == 11, "history length");
      for (std::size_t k = 1; k < ll->size(); ++k) {
        o.require((*ll)[k] >= (*ll)[k - 1] - 1e-9, "log-likelihood decreased in corpus " + std::to_string(trial));
      }
    }
  }
  return o;
}

// 3
Outcome copy_corpus() {
  Outcome o;
  Rng rng(3);
  std::vector<SentencePair> pairs;
  for (int k = 0; k < 100; ++k) {
    std::vector<std::string> s(3 + rng.below(8));
    for (auto& w : s) w = "w" + std::to_string(rng.below(20));
    pairs.push_back({s, s});
  }
  const ParallelCorpus corpus(std::move(pairs));
  const auto ibm1 = train_ibm1(corpus, 5);
  const auto model = train_ibm2(corpus, 5, ibm1.table).model;
  std::size_t identity = 0, total = 0;
  for (const auto& links : viterbi_align_all(model, corpus)) {
    for (const auto& l : links) {
      ++total;
      identity += l.source == l.target;
    }
  }
  const double rate = total ? static_cast<double>(identity) / static_cast<double>(total) : 0.0;
  o.detail = fmt("identity %.4f", rate);
  o.require(rate >= 0.99, o.detail);
  return o;
}

// 4
Outcome house_book() {
  Outcome o;
  const auto corpus = ParallelCorpus::parse("the house ||| das haus\nthe book ||| das buch\na book ||| ein buch\n");
  const auto ibm1 = train_ibm1(corpus, 5);
  const auto t = oracle::ibm1(to_oracle(corpus), 5);
  double worst = 0;
  std::size_t entries = 0;
  for (const auto& [e, row] : t) {
    for (const auto& [f, p] : row) {
      worst = std::max(worst, std::abs(ibm1.table.prob(library_word(e), f) - p));
      ++entries;
    }
  }
  const auto ibm2 = train_ibm2(corpus, 5, ibm1.table);
  const auto m2 = oracle::ibm2(to_oracle(corpus), 5, t);
  for (const auto& [e, row] : m2.t) {
    for (const auto& [f, p] : row) worst = std::max(worst, std::abs(ibm2.model.lexicon.prob(library_word(e), f) - p));
  }
  for (const auto& [key, p] : m2.a) {
    const auto [i, j, l, m] = key;
    worst = std::max(worst, std::abs(ibm2.model.distortion.prob(i, j, l, m) - p));
  }
  worst = std::max(worst, std::abs(ibm2.model.null_prob - m2.p0));
  o.detail = fmt("max deviation %.2e", worst);
  o.require(worst < 1e-9, o.detail);
  o.require(ibm1.table.argmax("book") == "buch", "argmax t(.|book) is not buch");
  o.require(entries > 0, "empty oracle table");
  return o;
}

// 5
Outcome projection_exactness() {
  Outcome o;
  Rng rng(5);
  std::size_t checked = 0, dropped_seen = 0, widened_seen = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto c = gen::permuted_case(rng);
    // Unlink some source tokens so that drops occur too.
    std::set<std::size_t> unlinked;
    if (rng.below(3) == 0) {
      for (std::size_t i = 0; i < c.target.size(); ++i) {
        if (rng.below(3) == 0) unlinked.insert(i);
      }
    }
    std::map<std::size_t, std::size_t> image_of;
    AlignmentLinks kept;
    for (const auto& l : c.links) {
      if (!unlinked.count(l.source)) {
        kept.insert(l);
        image_of[l.source] = l.target;
      }
    }
    const auto source_tokens = tokenize(c.source.text);
    std::map<std::string, LabelTally> expected;
    std::vector<std::optional<TokenRange>> want;
    for (const auto& span : c.source.spans) {
      const auto range = char_span_to_token_span(source_tokens, span.start, span.end);
      std::vector<std::size_t> image;
      for (std::size_t k = range->first; k <= range->last; ++k) {
        if (image_of.count(k)) image.push_back(image_of[k]);
      }
      auto& tally = expected[span.label];
      if (image.empty()) {
        ++tally.dropped;
        want.push_back(std::nullopt);
        continue;
      }
      std::sort(image.begin(), image.end());
      ++tally.projected;
      if (image.back() - image.front() + 1 != image.size()) {
        ++tally.noncontiguous;
        ++tally.widened;
      }
      want.push_back(TokenRange{image.front(), image.back()});
    }
    ProjectionReport report;
    const auto out = project_sentence(c.source, source_tokens, c.target, kept, &report);
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (!want[k]) continue;
      const auto& w = *want[k];
      const bool found = std::any_of(out.spans.begin(), out.spans.end(), [&](const TokenSpan& s) {
        return s.label == c.source.spans[k].label && s.first == w.first && s.last == w.last;
      });
      o.require(found, "missing projected span in trial " + std::to_string(trial));
      ++checked;
    }
    for (const auto& [label, tally] : expected) {
      const auto it = report.per_label.find(label);
      const LabelTally got = it == report.per_label.end() ? LabelTally{} : it->second;
      o.require(got == tally, "report tallies differ for " + label + " in trial " + std::to_string(trial));
      dropped_seen += tally.dropped;
      widened_seen += tally.widened;
    }
  }
  o.require(dropped_seen > 0 && widened_seen > 0, "generator produced no drops or widenings");
  if (o.pass) {
    o.detail = std::to_string(checked) + " spans, " + std::to_string(dropped_seen) + " drops, " +
               std::to_string(widened_seen) + " widenings";
  }
  return o;
}

// 6
Outcome bilou_bijection() {
  Outcome o;
  Rng rng(6);
  const std::vector<std::string> labels = {"Drug", "Strength", "Form", "Dosage"};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const auto spans = gen::disjoint_spans(rng, n, labels);
    const auto tags = encode_bilou(n, spans);
    o.require(decode_bilou(tags) == spans, "decode(encode(s)) != s in trial " + std::to_string(trial));
    o.require(encode_bilou(n, decode_bilou(tags)) == tags, "encode(decode(t)) != t in trial " + std::to_string(trial));
  }
  int rejected = 0;
  for (int trial = 0; rejected < 100 && trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const auto spans = gen::disjoint_spans(rng, n, labels);
    if (spans.empty()) continue;
    auto tags = encode_bilou(n, spans);
    const auto& s = spans[rng.below(spans.size())];
    const std::string other = s.label == "Drug" ? "Form" : "Drug";
    switch (rng.below(3)) {
      case 0:  // entity opened with a continuation tag
        tags[s.first] = (rng.below(2) == 0 ? "I-" : "L-") + s.label;
        break;
      case 1:  // entity never closed
        tags[s.last] = "I-" + s.label;
        if (s.first == s.last) tags[s.last] = "B-" + s.label;
        break;
      default:  // label switch inside an entity, or a unit turned into B
        if (s.last > s.first) {
          tags[s.last] = "L-" + other;
        } else {
          tags[s.first] = "B-" + s.label;
        }
        break;
    }
    try {
      decode_bilou(tags);
      o.require(false, "mutated sequence accepted");
    } catch (const StructureError&) {
      ++rejected;
    }
  }
  o.require(rejected == 100, "only " + std::to_string(rejected) + " mutations rejected");
  return o;
}

// 7
Outcome grammar_safety() {
  Outcome o;
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> labels;
    for (std::size_t k = 0, n = 1 + rng.below(6); k < n; ++k) labels.push_back("L" + std::to_string(k));
    TaggerHyperparams hp;
    hp.dim = 4 + rng.below(8);
    hp.rows = 8 + rng.below(64);
    hp.hidden = 2 + rng.below(10);
    hp.hash_seeds = 1 + rng.below(kMaxHashSeeds);
    hp.window = rng.below(3);
    hp.depth = rng.below(3);
    hp.seed = rng.next();
    const TaggerModel model(hp, TagInventory(labels));
    const auto tokens = gen::sentence(rng, "t", 50, 25);
    const auto actions = model.greedy_parse(tokens);
    o.require(actions.size() == tokens.size(), "wrong action count");
    try {
      decode_actions(actions, model.inventory());
    } catch (const std::exception& e) {
      o.require(false, std::string("ungrammatical parse: ") + e.what());
    }
  }
  return o;
}

// 8
Outcome gradient_check() {
  Outcome o;
  Rng rng(8);
  const std::vector<std::string> labels = {"A", "B"};
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TaggerHyperparams hp;
    hp.dim = 8;
    hp.rows = 16;
    hp.hidden = 8;
    hp.seed = seed;
    TaggerModel model(hp, TagInventory(labels));
    for (auto& b : model.weights().conv_bias) {
      for (auto& v : b) v = rng.uniform(-0.5, 0.5);
    }
    AnnotatedSentence s;
    std::string text;
    for (const auto& w : gen::sentence(rng, "w", 20, 7)) text += (text.empty() ? "" : " ") + w;
    s.tokens = tokenize(text);
    for (const auto& r : gen::disjoint_spans(rng, s.tokens.size(), labels)) {
      s.spans.push_back(make_token_span(s.tokens, r.label, r.first, r.last));
    }
    const auto gold = gold_sequence(s, model.inventory());
    TaggerWeights grad = model.weights().zeros_like();
    sentence_loss(model, gold, &grad);
    auto params = model.weights().tensors();
    const auto analytic = std::as_const(grad).tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t k = 0; k < params[t].size(); ++k) {
        const double n = oracle::central_difference(params[t], k, 1e-6, [&] { return sentence_loss(model, gold); });
        const double a = analytic[t][k];
        worst = std::max(worst, std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-7));
      }
    }
  }
  o.detail = fmt("max relative error %.2e", worst);
  o.require(worst < 1e-4, o.detail);
  return o;
}

// Source-side sentences of the toy fixture, tokenized and filtered like the
// projected dataset.
std::vector<AnnotatedSentence> toy_source_dataset() {
  const auto docs = ingest_corpus(fs::path(PROJNER_FIXTURE_DIR) / "toy" / "corpus");
  SyntheticValueSpec spec;
  spec.seed = 11;
  std::vector<AnnotatedSentence> out;
  ProjectionReport report;
  for (const auto& s : synthesize_all(sentencize(docs), spec)) {
    const auto tokens = tokenize(s.text);
    AlignmentLinks identity;
    for (std::size_t i = 0; i < tokens.size(); ++i) identity.insert({i, i});
    out.push_back(project_sentence(s, tokens, tokens, identity, &report));
  }
  return finalize_dataset(std::move(out), default_dropped_labels(), true, report);
}

// 9
Outcome overfit() {
  Outcome o;
  auto data = toy_source_dataset();
  o.require(data.size() >= 50, "fixture has only " + std::to_string(data.size()) + " sentences");
  data.resize(std::min<std::size_t>(50, data.size()));
  TaggerHyperparams hp;
  hp.epochs = 200;
  hp.seed = 9;
  const auto inventory = inventory_for({&data});
  const auto result = train_tagger(TaggerModel(hp, inventory), data, data);
  std::size_t first = 0;
  for (const auto& e : result.history) {
    if (e.validation_accuracy >= 0.99) {
      first = e.epoch;
      break;
    }
  }
  const double acc = token_accuracy(result.model, gold_sequences(data, result.model.inventory()));
  o.detail = fmt("accuracy %.4f", acc) + (first ? ", 99% first reached at epoch " + std::to_string(first) : "");
  o.require(acc >= 0.99 && first > 0, o.detail);
  return o;
}

// 10
Outcome metrics_oracle() {
  Outcome o;
  {
    const auto r = token_metrics({{"Drug", "O", "O", "Dosage"}}, {{"Drug", "Drug", "O", "Dosage"}});
    const auto& drug = r.per_class[1];
    o.require(drug.label == "Drug" && std::abs(drug.precision - 0.5) < 1e-12 && std::abs(drug.recall - 1.0) < 1e-12 &&
                  std::abs(drug.f1 - 2.0 / 3.0) < 1e-12,
              "worked example per-class scores");
    o.require(std::abs(r.total.f1 - 5.0 / 6.0) < 1e-12, "worked example weighted F1");
  }
  const std::vector<std::string> labels = {"O", "O", "O", "Drug", "Strength", "Form", "Dosage"};
  auto matches = [](const EvaluationReport& r, const std::map<std::string, oracle::Counts>& want) {
    if (r.per_class.size() != want.size()) return false;
    for (const auto& s : r.per_class) {
      const auto it = want.find(s.label);
      if (it == want.end()) return false;
      if (static_cast<long>(s.tp) != it->second.tp || static_cast<long>(s.fp) != it->second.fp ||
          static_cast<long>(s.fn) != it->second.fn) {
        return false;
      }
    }
    return true;
  };
  Rng rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<LabelSequence> gold, pred;
    for (std::size_t s = 0, n = 1 + rng.below(5); s < n; ++s) {
      const std::size_t len = 1 + rng.below(15);
      gold.emplace_back();
      pred.emplace_back();
      for (std::size_t i = 0; i < len; ++i) {
        gold.back().push_back(labels[rng.below(labels.size())]);
        pred.back().push_back(rng.below(2) == 0 ? gold.back().back() : labels[rng.below(labels.size())]);
      }
    }
    o.require(matches(token_metrics(gold, pred), oracle::confusion_counts(gold, pred)),
              "token counts differ in trial " + std::to_string(trial));

    std::vector<CharAnnotation> cg, cp;
    std::vector<std::vector<oracle::Interval>> ig, ip;
    for (std::size_t s = 0, n = 1 + rng.below(4); s < n; ++s) {
      const std::size_t len = 1 + rng.below(50);
      const std::string text(len, 'x');
      for (auto [side, iv] : {std::pair{&cg, &ig}, std::pair{&cp, &ip}}) {
        CharAnnotation a{text, {}};
        iv->emplace_back();
        for (std::size_t i = 0; i < len;) {
          if (rng.below(4) == 0) {
            const std::size_t w = 1 + rng.below(std::min<std::size_t>(9, len - i));
            const auto& label = labels[3 + rng.below(4)];
            a.spans.push_back({label, i, i + w, ""});
            iv->back().push_back({label, static_cast<long>(i), static_cast<long>(i + w)});
            i += w;
          } else {
            ++i;
          }
        }
        side->push_back(std::move(a));
      }
    }
    o.require(matches(char_metrics(cg, cp), oracle::interval_counts(ig, ip)),
              "character counts differ in trial " + std::to_string(trial));
  }
  return o;
}

// 11
Outcome pharaoh_round_trip() {
  Outcome o;
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto links = gen::random_links(rng, 60, 30);
    const auto line = emit_pharaoh(links);
    o.require(parse_pharaoh(line) == links, "parse(emit(x)) != x in trial " + std::to_string(trial));
    o.require(emit_pharaoh(parse_pharaoh(line)) == line, "emit(parse(l)) != l in trial " + std::to_string(trial));
  }
  return o;
}

// 12
Outcome pipeline_determinism() {
  Outcome o;
  const fs::path toy = fs::path(PROJNER_FIXTURE_DIR) / "toy";
  const fs::path work = fs::temp_directory_path() / "projner_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  auto config = parse_config(slurp(toy / "pipeline.conf"), toy);
  config.corpus_dir = (toy / config.corpus_dir).string();
  config.parallel_file = (toy / config.parallel_file).string();
  config.output_dir = (work / "out").string();

  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(work / "out")) {
      files[entry.path().filename().string()] = slurp(entry.path());
    }
    return files;
  };
  run_pipeline(config);
  const auto first = snapshot();
  fs::remove_all(work / "out");
  run_pipeline(config);
  const auto second = snapshot();
  fs::remove_all(work);

  for (const char* name : {"dataset.jsonl", "train.jsonl", "validation.jsonl", "test.jsonl", "tagger.bin",
                           "report.json", "report.txt", "manifest.json"}) {
    o.require(first.count(name) == 1, std::string("missing ") + name);
  }
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    o.require(it != second.end() && it->second == bytes, name + " differs between runs");
  }
  o.require(first.size() == second.size(), "different file sets");
  if (o.pass) o.detail = std::to_string(first.size()) + " files identical";
  return o;
}

}  // namespace

int main() {
  criterion(1, "split arithmetic", 1, split_arithmetic);
  criterion(2, "EM monotonicity", 10, em_monotonicity);
  criterion(3, "copy-corpus alignment", 5, copy_corpus);
  criterion(4, "toy EM oracle", 1, house_book);
  criterion(5, "projection exactness", 5, projection_exactness);
  criterion(6, "BILOU codec bijection", 5, bilou_bijection);
  criterion(7, "grammar safety", 10, grammar_safety);
  criterion(8, "gradient check", 10, gradient_check);
  criterion(9, "overfit capacity", 60, overfit);
  criterion(10, "metrics oracle", 5, metrics_oracle);
  criterion(11, "Pharaoh codec", 1, pharaoh_round_trip);
  criterion(12, "end-to-end determinism", 90, pipeline_determinism);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
