#include "projner/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "projner/config.hpp"
#include "projner/error.hpp"
#include "projner/log.hpp"
#include "projner/pipeline.hpp"
#include "projner/training.hpp"
#include "projner/utf8.hpp"

namespace projner::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingInputError*>(&e)) return kMissingInput;
  if (dynamic_cast<const ConfigError*>(&e)) return kInvalidConfig;
  return kInternal;
}

namespace {

std::set<std::string> label_set(const std::string& value) {
  const auto items = parse_list(value);
  return {items.begin(), items.end()};
}

std::vector<Sentence> read_sentences(const fs::path& path) {
  std::vector<Sentence> out;
  for (const auto& j : read_jsonl(path)) out.push_back(sentence_from_json(j));
  return out;
}

std::string sentences_to_jsonl(const std::vector<Sentence>& sentences) {
  std::vector<ojson> records;
  for (const auto& s : sentences) records.push_back(sentence_to_json(s));
  return to_jsonl(records);
}

// Plain text lines, or JSON-lines records carrying a "text" field.
std::vector<std::string> read_texts(const fs::path& path) {
  const auto lines = read_lines(path);
  const bool jsonl = !lines.empty() && !lines.front().empty() && lines.front().front() == '{';
  if (!jsonl) return lines;
  std::vector<std::string> texts;
  for (const auto& j : read_jsonl(path)) texts.push_back(j.at("text").get<std::string>());
  return texts;
}

ParallelCorpus read_corpus(const fs::path& path, std::size_t max_length) {
  return ParallelCorpus::parse(read_file(path), max_length);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Annotation projection and transition-based NER toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // ingest
  std::string corpus_dir, out;
  auto* ingest = app.add_subcommand("ingest", "Parse <doc>.txt/<doc>.ann pairs into document records");
  ingest->add_option("--corpus-dir", corpus_dir, "Directory of .txt/.ann pairs")->required();
  ingest->add_option("--out", out, "Output JSON-lines file")->required();

  // sentencize
  std::string in;
  std::string abbreviations;
  auto* sentencize_cmd = app.add_subcommand("sentencize", "Split documents into sentence records");
  auto* sent_in = sentencize_cmd->add_option("--in", in, "Document JSON-lines from ingest");
  auto* sent_dir = sentencize_cmd->add_option("--corpus-dir", corpus_dir, "Directory of .txt/.ann pairs");
  sent_in->excludes(sent_dir);
  sentencize_cmd->add_option("--abbreviations", abbreviations, "Comma-separated abbreviation list");
  sentencize_cmd->add_option("--out", out, "Output sentence JSON-lines")->required();

  // synthesize
  std::uint64_t seed = 1;
  std::string pattern{kDefaultPlaceholderPattern};
  auto* synth = app.add_subcommand("synthesize", "Replace placeholders with seeded synthetic values");
  synth->add_option("--in", in, "Sentence JSON-lines")->required();
  synth->add_option("--out", out, "Output sentence JSON-lines")->required();
  synth->add_option("--seed", seed, "Synthesis seed")->capture_default_str();
  synth->add_option("--pattern", pattern, "Placeholder regular expression")->capture_default_str();

  // tokenize
  std::string punctuation;
  auto* tok = app.add_subcommand("tokenize", "Tokenize text lines");
  tok->add_option("--in", in, "Text file, one sentence per line")->required();
  tok->add_option("--out", out, "Output JSON-lines")->required();
  tok->add_option("--punctuation", punctuation, "Characters to treat as punctuation instead of the built-in set");

  // align-train
  std::string corpus_file, model_file, history_file;
  std::size_t ibm1_iters = 5, ibm2_iters = 5, workers = 1, max_length = kDefaultMaxSentenceLength;
  bool diagonal = false;
  double tension = 4.0;
  auto* atrain = app.add_subcommand("align-train", "Train IBM-1 then IBM-2 alignment models");
  atrain->add_option("--corpus", corpus_file, "Parallel file, 'source ||| target' per line")->required();
  atrain->add_option("--ibm1-iters", ibm1_iters, "IBM-1 iterations")->capture_default_str()->check(CLI::PositiveNumber);
  atrain->add_option("--ibm2-iters", ibm2_iters, "IBM-2 iterations")->capture_default_str()->check(CLI::PositiveNumber);
  atrain->add_option("--model", model_file, "Output model (JSON)")->required();
  atrain->add_option("--workers", workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  atrain->add_flag("--diagonal-prior", diagonal, "Use the fixed diagonal distortion prior");
  atrain->add_option("--tension", tension, "Diagonal prior tension")->capture_default_str();
  atrain->add_option("--max-length", max_length, "Maximum tokens per side")->capture_default_str();
  atrain->add_option("--history", history_file, "Write per-iteration log-likelihoods (JSON)");

  // align
  std::string align_out;
  auto* align = app.add_subcommand("align", "Viterbi-align a parallel file");
  align->add_option("--model", model_file, "Model from align-train")->required();
  align->add_option("--corpus", corpus_file, "Parallel file")->required();
  align->add_option("--out", align_out, "Output Pharaoh file")->required();
  align->add_option("--workers", workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  align->add_option("--max-length", max_length, "Maximum tokens per side")->capture_default_str();

  // project
  std::string src, tgt, align_file, report_file;
  std::string dropped = "ADE,Reason,Route";
  bool keep_empty = false;
  auto* project = app.add_subcommand("project", "Project source spans onto target sentences");
  project->add_option("--src", src, "Source sentence JSON-lines")->required();
  project->add_option("--tgt", tgt, "Target lines (or 'source ||| target' lines)")->required();
  project->add_option("--align", align_file, "Pharaoh alignment file")->required();
  project->add_option("--out", out, "Output dataset JSON-lines")->required();
  project->add_option("--report", report_file, "Write the projection report (JSON)");
  project->add_option("--dropped-labels", dropped, "Comma-separated labels to remove")->capture_default_str();
  project->add_flag("--keep-empty", keep_empty, "Keep sentences without spans");

  // split
  std::string ratios_text = "0.8,0.1,0.1", out_dir;
  auto* split = app.add_subcommand("split", "Seeded train/validation/test split");
  split->add_option("--in", in, "Dataset JSON-lines")->required();
  split->add_option("--ratios", ratios_text, "train,validation,test")->capture_default_str();
  split->add_option("--seed", seed, "Split seed")->capture_default_str();
  split->add_option("--out-dir", out_dir, "Directory for train/validation/test.jsonl")->required();

  // train
  std::string train_file, val_file, hyper_file;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::size_t> epochs;
  auto* train = app.add_subcommand("train", "Train the transition-based tagger");
  train->add_option("--train", train_file, "Training dataset JSON-lines")->required();
  train->add_option("--val", val_file, "Validation dataset JSON-lines")->required();
  train->add_option("--out", model_file, "Output model file")->required();
  train->add_option("--hyperparams", hyper_file, "'key = value' hyperparameter file");
  train->add_option("--seed", train_seed, "Training seed (overrides the file)");
  train->add_option("--epochs", epochs, "Epochs (overrides the file)");
  train->add_option("--history", history_file, "Write per-epoch history (JSON)");

  // tag
  auto* tag = app.add_subcommand("tag", "Tag sentences with a trained model");
  tag->add_option("--model", model_file, "Model file")->required();
  tag->add_option("--in", in, "Text lines or JSON-lines records with a text field")->required();
  tag->add_option("--out", out, "Output dataset JSON-lines")->required();

  // evaluate
  std::string gold_file, pred_file, label_map_file, pred_map_file, level_text = "both", table_file;
  auto* evaluate = app.add_subcommand("evaluate", "Token- and character-level scores");
  evaluate->add_option("--gold", gold_file, "Gold JSON-lines")->required();
  evaluate->add_option("--pred", pred_file, "Predicted JSON-lines")->required();
  evaluate->add_option("--label-map", label_map_file, "Map applied to gold labels ('external=internal' lines)");
  evaluate->add_option("--pred-label-map", pred_map_file, "Map applied to predicted labels");
  evaluate->add_option("--level", level_text, "token, char or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"token", "char", "both"}));
  evaluate->add_option("--out", out, "Output report (JSON)")->required();
  evaluate->add_option("--table", table_file, "Write the plain-text table here (default: stdout)");

  // pipeline
  std::string config_file;
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage from a config file");
  pipeline->add_option("--config", config_file, "Config file ('section.key = value' lines)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (*ingest) {
      std::vector<ojson> records;
      for (const auto& doc : ingest_corpus(corpus_dir)) records.push_back(document_to_json(doc));
      write_file_atomic(out, to_jsonl(records));
    } else if (*sentencize_cmd) {
      if (in.empty() && corpus_dir.empty()) throw ConfigError("sentencize needs --in or --corpus-dir");
      std::vector<StandoffDocument> docs;
      if (!in.empty()) {
        for (const auto& j : read_jsonl(in)) docs.push_back(document_from_json(j));
      } else {
        docs = ingest_corpus(corpus_dir);
      }
      SegmenterOptions options;
      if (!abbreviations.empty()) options.abbreviations = parse_list(abbreviations);
      write_file_atomic(out, sentences_to_jsonl(sentencize(docs, options)));
    } else if (*synth) {
      SyntheticValueSpec spec;
      spec.seed = seed;
      spec.pattern = pattern;
      write_file_atomic(out, sentences_to_jsonl(synthesize_all(read_sentences(in), spec)));
    } else if (*tok) {
      TokenizerOptions options;
      if (!punctuation.empty()) options.punctuation = utf8::decode(punctuation);
      const Tokenizer tokenizer(options);
      std::vector<ojson> records;
      for (const auto& line : read_lines(in)) records.push_back(tokens_to_json(tokenizer.tokenize(line)));
      write_file_atomic(out, to_jsonl(records));
    } else if (*atrain) {
      AlignerSettings settings;
      settings.ibm1_iterations = ibm1_iters;
      settings.ibm2_iterations = ibm2_iters;
      settings.workers = workers;
      settings.diagonal_prior = diagonal;
      settings.tension = tension;
      const auto corpus = read_corpus(corpus_file, max_length);
      const auto run = train_aligner(corpus, settings);
      write_file_atomic(model_file, to_json(run.model).dump(1) + "\n");
      if (!history_file.empty()) write_file_atomic(history_file, aligner_history_json(run).dump(2) + "\n");
      log::info("align-train", {{"pairs", corpus.size()}, {"log_likelihood", run.ibm2_log_likelihood.back()}});
    } else if (*align) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(model_file));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(model_file + ": " + e.what());
      }
      const auto model = alignment_model_from_json(j);
      const auto corpus = read_corpus(corpus_file, max_length);
      write_file_atomic(align_out, emit_pharaoh_file(viterbi_align_all(model, corpus, workers)));
    } else if (*project) {
      ProjectionReport report;
      auto projected = project_corpus(read_sentences(src), read_parallel_lines(tgt), read_pharaoh_file(align_file), report);
      auto dataset = finalize_dataset(std::move(projected), label_set(dropped), !keep_empty, report);
      write_file_atomic(out, dataset_to_jsonl(dataset));
      if (!report_file.empty()) write_file_atomic(report_file, report_to_json(report).dump(2) + "\n");
    } else if (*split) {
      const SplitRatios ratios = parse_ratios("--ratios", ratios_text);
      const auto result = split_dataset(read_dataset(in), ratios, seed);
      write_file_atomic(fs::path(out_dir) / "train.jsonl", dataset_to_jsonl(result.train));
      write_file_atomic(fs::path(out_dir) / "validation.jsonl", dataset_to_jsonl(result.validation));
      write_file_atomic(fs::path(out_dir) / "test.jsonl", dataset_to_jsonl(result.test));
    } else if (*train) {
      TaggerHyperparams hp;
      if (!hyper_file.empty()) apply_hyperparams(hp, KeyValueFile::parse(read_file(hyper_file), hyper_file), "");
      if (train_seed) hp.seed = *train_seed;
      if (epochs) hp.epochs = *epochs;
      const auto train_set = read_dataset(train_file);
      const auto val_set = read_dataset(val_file);
      const TagInventory inventory = inventory_for({&train_set, &val_set});
      const auto result = train_tagger(TaggerModel(hp, inventory), train_set, val_set);
      result.model.save(model_file);
      if (!history_file.empty()) {
        ojson epochs_json = ojson::array();
        for (const auto& e : result.history) {
          epochs_json.push_back(
              {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_accuracy", e.validation_accuracy}});
        }
        const ojson history = {{"best_epoch", result.best_epoch},
                               {"best_validation_accuracy", result.best_validation_accuracy},
                               {"epochs", epochs_json}};
        write_file_atomic(history_file, history.dump(2) + "\n");
      }
    } else if (*tag) {
      const auto model = TaggerModel::load(model_file);
      write_file_atomic(out, dataset_to_jsonl(tag_texts(model, read_texts(in))));
    } else if (*evaluate) {
      std::optional<LabelMap> gold_map, pred_map;
      if (!label_map_file.empty()) gold_map = LabelMap::parse(read_file(label_map_file));
      if (!pred_map_file.empty()) pred_map = LabelMap::parse(read_file(pred_map_file));
      const auto result = evaluate_records(read_jsonl(gold_file), read_jsonl(pred_file), gold_map, pred_map,
                                           parse_level(level_text));
      write_file_atomic(out, result.json.dump(2) + "\n");
      if (table_file.empty()) {
        std::cout << result.table;
      } else {
        write_file_atomic(table_file, result.table);
      }
    } else if (*pipeline) {
      run_pipeline(validate_config(config_file));
    }
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    log::error("failed", {{"exit_code", code}, {"message", e.what()}});
    return code;
  }
  return kOk;
}

}  // namespace projner::cli
