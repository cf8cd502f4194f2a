#include "projner/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "projner/error.hpp"

namespace projner {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view content, std::string_view source) {
  KeyValueFile file;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (file.entries.count(key)) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                        std::to_string(file.entries.at(key).line) + ")");
    }
    file.entries.emplace(std::move(key), Entry{std::move(value), line_no});
  }
  return file;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + std::string(value) + "'");
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
  }
  return out;
}

std::vector<std::string> parse_list(std::string_view value) {
  std::string v = trim(value);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::string> items;
  std::size_t begin = 0;
  while (begin <= v.size()) {
    auto end = v.find(',', begin);
    if (end == std::string::npos) end = v.size();
    std::string item = trim(std::string_view(v).substr(begin, end - begin));
    if (!item.empty()) items.push_back(std::move(item));
    begin = end + 1;
  }
  return items;
}

SplitRatios parse_ratios(std::string_view key, std::string_view value) {
  const auto items = parse_list(value);
  if (items.size() != 3) {
    throw ConfigError(std::string(key) + ": expected three ratios (train, validation, test)");
  }
  SplitRatios r{parse_double(key, items[0]), parse_double(key, items[1]), parse_double(key, items[2])};
  if (r.train <= 0 || r.validation <= 0 || r.test <= 0) {
    throw ConfigError(std::string(key) + ": ratios must be positive");
  }
  const double sum = r.train + r.validation + r.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(std::string(key) + ": ratios sum to " + format_double(sum) + ", expected 1");
  }
  return r;
}

void apply_hyperparams(TaggerHyperparams& hp, const KeyValueFile& file, std::string_view prefix) {
  std::vector<std::string> unknown;
  for (const auto& [full_key, entry] : file.entries) {
    if (full_key.rfind(prefix, 0) != 0) continue;
    const std::string key = full_key.substr(prefix.size());
    const std::string& v = entry.value;
    if (key == "dim") {
      hp.dim = parse_unsigned(full_key, v);
    } else if (key == "rows") {
      hp.rows = parse_unsigned(full_key, v);
    } else if (key == "hash_seeds") {
      hp.hash_seeds = parse_unsigned(full_key, v);
    } else if (key == "window") {
      hp.window = parse_unsigned(full_key, v);
    } else if (key == "depth") {
      hp.depth = parse_unsigned(full_key, v);
    } else if (key == "hidden") {
      hp.hidden = parse_unsigned(full_key, v);
    } else if (key == "learning_rate") {
      hp.learning_rate = parse_double(full_key, v);
    } else if (key == "batch_size") {
      hp.batch_size = parse_unsigned(full_key, v);
    } else if (key == "epochs") {
      hp.epochs = parse_unsigned(full_key, v);
    } else if (key == "seed" && prefix.empty()) {
      hp.seed = parse_unsigned(full_key, v);
    } else {
      unknown.push_back(full_key);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown hyperparameter keys: " + list);
  }
  if (hp.dim == 0 || hp.rows == 0 || hp.hidden == 0 || hp.batch_size == 0) {
    throw ConfigError("hyperparameters dim, rows, hidden and batch_size must be positive");
  }
  if (hp.hash_seeds == 0 || hp.hash_seeds > kMaxHashSeeds) {
    throw ConfigError("hash_seeds must be between 1 and " + std::to_string(kMaxHashSeeds));
  }
  if (!(hp.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
}

EvaluationLevel parse_level(std::string_view value) {
  if (value == "token") return EvaluationLevel::Token;
  if (value == "char") return EvaluationLevel::Char;
  if (value == "both") return EvaluationLevel::Both;
  throw ConfigError("evaluation level must be token, char or both, got '" + std::string(value) + "'");
}

std::string_view to_string(EvaluationLevel level) {
  switch (level) {
    case EvaluationLevel::Token:
      return "token";
    case EvaluationLevel::Char:
      return "char";
    case EvaluationLevel::Both:
      break;
  }
  return "both";
}

std::filesystem::path PipelineConfig::resolved(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

namespace {

const std::set<std::string> kTaggerKeys = {"tagger.dim",    "tagger.rows",   "tagger.hash_seeds",
                                           "tagger.window", "tagger.depth",  "tagger.hidden",
                                           "tagger.learning_rate", "tagger.batch_size", "tagger.epochs"};

}  // namespace

PipelineConfig parse_config(std::string_view content, const std::filesystem::path& base_dir) {
  const KeyValueFile file = KeyValueFile::parse(content);
  PipelineConfig c;
  c.base_dir = base_dir;
  std::vector<std::string> unknown;
  bool have_corpus = false, have_parallel = false, have_output = false;

  for (const auto& [key, entry] : file.entries) {
    const std::string& v = entry.value;
    if (key == "paths.corpus_dir") {
      c.corpus_dir = v;
      have_corpus = !v.empty();
    } else if (key == "paths.parallel_file") {
      c.parallel_file = v;
      have_parallel = !v.empty();
    } else if (key == "paths.alignment_file") {
      if (!v.empty()) c.alignment_file = v;
    } else if (key == "paths.output_dir") {
      c.output_dir = v;
      have_output = !v.empty();
    } else if (key == "seeds.synthesis") {
      c.synthesis_seed = parse_unsigned(key, v);
    } else if (key == "seeds.split") {
      c.split_seed = parse_unsigned(key, v);
    } else if (key == "seeds.training") {
      c.training_seed = parse_unsigned(key, v);
    } else if (key == "stages.synthesize") {
      c.synthesize = parse_bool(key, v);
    } else if (key == "stages.train") {
      c.train = parse_bool(key, v);
    } else if (key == "stages.evaluate") {
      c.evaluate = parse_bool(key, v);
    } else if (key == "filter.dropped_labels") {
      const auto items = parse_list(v);
      c.dropped_labels = std::set<std::string>(items.begin(), items.end());
    } else if (key == "filter.drop_empty") {
      c.drop_empty = parse_bool(key, v);
    } else if (key == "split.ratios") {
      c.ratios = parse_ratios(key, v);
    } else if (key == "segment.abbreviations") {
      c.abbreviations = parse_list(v);
    } else if (key == "synthesis.pattern") {
      if (v.empty()) throw ConfigError("synthesis.pattern: empty pattern");
      c.placeholder_pattern = v;
    } else if (key == "aligner.ibm1_iterations") {
      c.aligner.ibm1_iterations = parse_unsigned(key, v);
    } else if (key == "aligner.ibm2_iterations") {
      c.aligner.ibm2_iterations = parse_unsigned(key, v);
    } else if (key == "aligner.diagonal_prior") {
      c.aligner.diagonal_prior = parse_bool(key, v);
    } else if (key == "aligner.tension") {
      c.aligner.tension = parse_double(key, v);
    } else if (key == "aligner.workers") {
      c.aligner.workers = parse_unsigned(key, v);
    } else if (key == "aligner.max_sentence_length") {
      c.aligner.max_sentence_length = parse_unsigned(key, v);
    } else if (key == "evaluate.label_map") {
      if (!v.empty()) c.label_map = v;
    } else if (key == "evaluate.level") {
      c.level = parse_level(v);
    } else if (kTaggerKeys.count(key)) {
      continue;  // handled below
    } else {
      unknown.push_back(key);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config keys: " + list);
  }
  apply_hyperparams(c.tagger, file, "tagger.");
  c.tagger.seed = c.training_seed;

  std::vector<std::string> missing;
  if (!have_corpus) missing.push_back("paths.corpus_dir");
  if (!have_parallel) missing.push_back("paths.parallel_file");
  if (!have_output) missing.push_back("paths.output_dir");
  if (!missing.empty()) {
    std::string list;
    for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("missing required config keys: " + list);
  }
  if (c.aligner.ibm1_iterations == 0) throw ConfigError("aligner.ibm1_iterations must be at least 1");
  if (c.aligner.ibm2_iterations == 0) throw ConfigError("aligner.ibm2_iterations must be at least 1");
  if (c.aligner.workers == 0) throw ConfigError("aligner.workers must be at least 1");
  if (c.aligner.max_sentence_length == 0) throw ConfigError("aligner.max_sentence_length must be at least 1");
  if (!(c.aligner.tension > 0)) throw ConfigError("aligner.tension must be positive");
  if (c.evaluate && !c.train) throw ConfigError("stages.evaluate requires stages.train");
  return c;
}

PipelineConfig validate_config(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  PipelineConfig c = parse_config(content, path.parent_path());
  auto require = [&](const std::string& key, const std::string& p) {
    if (!std::filesystem::exists(c.resolved(p))) {
      throw MissingInputError(key + ": '" + c.resolved(p).string() + "' does not exist");
    }
  };
  require("paths.corpus_dir", c.corpus_dir);
  require("paths.parallel_file", c.parallel_file);
  if (c.alignment_file) require("paths.alignment_file", *c.alignment_file);
  if (c.label_map) require("evaluate.label_map", *c.label_map);
  return c;
}

ojson config_to_json(const PipelineConfig& c) {
  ojson j;
  j["paths"] = {{"corpus_dir", c.corpus_dir},
                {"parallel_file", c.parallel_file},
                {"alignment_file", c.alignment_file ? ojson(*c.alignment_file) : ojson(nullptr)},
                {"output_dir", c.output_dir}};
  j["seeds"] = {{"synthesis", c.synthesis_seed}, {"split", c.split_seed}, {"training", c.training_seed}};
  j["stages"] = {{"synthesize", c.synthesize}, {"train", c.train}, {"evaluate", c.evaluate}};
  j["filter"] = {{"dropped_labels", c.dropped_labels}, {"drop_empty", c.drop_empty}};
  j["split"] = {{"ratios", {c.ratios.train, c.ratios.validation, c.ratios.test}}};
  j["segment"] = {{"abbreviations", c.abbreviations}};
  j["synthesis"] = {{"pattern", c.placeholder_pattern}};
  j["aligner"] = {{"ibm1_iterations", c.aligner.ibm1_iterations},
                  {"ibm2_iterations", c.aligner.ibm2_iterations},
                  {"diagonal_prior", c.aligner.diagonal_prior},
                  {"tension", c.aligner.tension},
                  {"workers", c.aligner.workers},
                  {"max_sentence_length", c.aligner.max_sentence_length}};
  j["tagger"] = {{"dim", c.tagger.dim},
                 {"rows", c.tagger.rows},
                 {"hash_seeds", c.tagger.hash_seeds},
                 {"window", c.tagger.window},
                 {"depth", c.tagger.depth},
                 {"hidden", c.tagger.hidden},
                 {"learning_rate", c.tagger.learning_rate},
                 {"batch_size", c.tagger.batch_size},
                 {"epochs", c.tagger.epochs}};
  j["evaluate"] = {{"label_map", c.label_map ? ojson(*c.label_map) : ojson(nullptr)},
                   {"level", std::string(to_string(c.level))}};
  return j;
}

}  // namespace projner
