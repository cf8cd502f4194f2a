#include "projner/pipeline.hpp"

#include <algorithm>
#include <map>

#include "projner/error.hpp"
#include "projner/log.hpp"
#include "projner/training.hpp"
#include "projner/utf8.hpp"

namespace projner {

namespace fs = std::filesystem;

std::vector<StandoffDocument> ingest_corpus(const fs::path& dir, std::vector<CorpusFile>* files) {
  if (!fs::is_directory(dir)) throw MissingInputError("corpus directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> texts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") texts.push_back(entry.path());
  }
  std::sort(texts.begin(), texts.end());
  std::vector<StandoffDocument> docs;
  for (const auto& txt : texts) {
    fs::path ann = txt;
    ann.replace_extension(".ann");
    if (!fs::exists(ann)) throw MissingInputError("no annotation file for '" + txt.string() + "'");
    const std::string text = read_file(txt);
    const std::string annotations = read_file(ann);
    const std::string doc_id = txt.stem().string();
    try {
      docs.push_back(parse_standoff(text, annotations, doc_id));
    } catch (const Error& e) {
      // Keep the error class, add the file.
      const std::string msg = ann.filename().string() + ": " + e.what();
      if (dynamic_cast<const ParseError*>(&e)) throw ParseError(msg);
      if (dynamic_cast<const RangeError*>(&e)) throw RangeError(msg);
      if (dynamic_cast<const IntegrityError*>(&e)) throw IntegrityError(msg);
      throw;
    }
    if (files) {
      files->push_back({txt.filename().string(), digest_hex(text)});
      files->push_back({ann.filename().string(), digest_hex(annotations)});
    }
  }
  return docs;
}

std::vector<Sentence> sentencize(const std::vector<StandoffDocument>& docs, const SegmenterOptions& options) {
  std::vector<Sentence> out;
  for (const auto& doc : docs) {
    auto sentences = segment_sentences(doc, options);
    out.insert(out.end(), std::make_move_iterator(sentences.begin()), std::make_move_iterator(sentences.end()));
  }
  return out;
}

std::vector<Sentence> synthesize_all(const std::vector<Sentence>& sentences, const SyntheticValueSpec& spec) {
  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    SyntheticValueSpec local = spec;
    local.seed = derive_sentence_seed(spec.seed, s.doc_id, s.doc_offset);
    out.push_back(synthesize_placeholders(s, local));
  }
  return out;
}

AlignerRun train_aligner(const ParallelCorpus& corpus, const AlignerSettings& settings) {
  TrainingOptions options;
  options.workers = settings.workers;
  options.diagonal_prior = settings.diagonal_prior;
  options.tension = settings.tension;
  auto ibm1 = train_ibm1(corpus, static_cast<int>(settings.ibm1_iterations), options);
  auto ibm2 = train_ibm2(corpus, static_cast<int>(settings.ibm2_iterations), ibm1.table, options);
  return {std::move(ibm2.model), std::move(ibm1.log_likelihood), std::move(ibm2.log_likelihood)};
}

ojson aligner_history_json(const AlignerRun& run) {
  return {{"ibm1_log_likelihood", run.ibm1_log_likelihood}, {"ibm2_log_likelihood", run.ibm2_log_likelihood}};
}

std::vector<ParallelLine> read_parallel_lines(const fs::path& path) {
  std::vector<ParallelLine> out;
  for (auto& line : read_lines(path)) {
    const auto sep = line.find(" ||| ");
    if (sep == std::string::npos) {
      out.push_back({std::nullopt, std::move(line)});
    } else {
      out.push_back({line.substr(0, sep), line.substr(sep + 5)});
    }
  }
  return out;
}

std::vector<AlignmentLinks> read_pharaoh_file(const fs::path& path) {
  std::vector<AlignmentLinks> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(parse_pharaoh(line));
    } catch (const ParseError& e) {
      throw ParseError(path.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string emit_pharaoh_file(const std::vector<AlignmentLinks>& alignments) {
  std::string out;
  for (const auto& links : alignments) out += emit_pharaoh(links) + "\n";
  return out;
}

std::vector<AnnotatedSentence> project_corpus(const std::vector<Sentence>& sentences,
                                              const std::vector<ParallelLine>& lines,
                                              const std::vector<AlignmentLinks>& alignments,
                                              ProjectionReport& report) {
  if (lines.size() != sentences.size()) {
    throw ShapeError(std::to_string(sentences.size()) + " sentences but " + std::to_string(lines.size()) +
                     " target lines");
  }
  if (alignments.size() != sentences.size()) {
    throw ShapeError(std::to_string(sentences.size()) + " sentences but " + std::to_string(alignments.size()) +
                     " alignment lines");
  }
  std::vector<AnnotatedSentence> out;
  out.reserve(sentences.size());
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const TokenizedSentence source = tokenize(sentences[k].text);
    if (lines[k].source && tokenize(*lines[k].source).surfaces() != source.surfaces()) {
      throw IntegrityError("parallel line " + std::to_string(k + 1) + ": source side does not match sentence " +
                           std::to_string(k + 1));
    }
    const TokenizedSentence target = tokenize(lines[k].target);
    try {
      out.push_back(project_sentence(sentences[k], source, target, alignments[k], &report));
    } catch (const RangeError& e) {
      throw RangeError("alignment line " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  report.sentences_total += out.size();
  return out;
}

std::vector<AnnotatedSentence> finalize_dataset(std::vector<AnnotatedSentence> projected,
                                                const std::set<std::string>& dropped_labels, bool drop_empty,
                                                ProjectionReport& report) {
  for (auto& s : projected) {
    const std::size_t before = s.spans.size();
    std::erase_if(s.spans, [&](const TokenSpan& span) { return dropped_labels.count(span.label) > 0; });
    report.spans_removed_by_label += before - s.spans.size();
    const std::size_t kept_labels = s.spans.size();
    s.spans = resolve_overlaps(std::move(s.spans));
    report.spans_removed_by_overlap += kept_labels - s.spans.size();
  }
  auto out = filter_dataset(std::move(projected), {}, drop_empty);
  report.sentences_kept += out.size();
  return out;
}

std::vector<AnnotatedSentence> read_dataset(const fs::path& path) {
  std::vector<AnnotatedSentence> out;
  std::size_t k = 0;
  for (const auto& j : read_jsonl(path)) {
    ++k;
    try {
      out.push_back(annotated_from_json(j));
    } catch (const IntegrityError& e) {
      throw IntegrityError(path.filename().string() + " record " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

std::string dataset_to_jsonl(const std::vector<AnnotatedSentence>& sentences) {
  std::vector<ojson> records;
  records.reserve(sentences.size());
  for (const auto& s : sentences) records.push_back(annotated_to_json(s));
  return to_jsonl(records);
}

std::vector<AnnotatedSentence> tag_texts(const TaggerModel& model, const std::vector<std::string>& texts) {
  std::vector<AnnotatedSentence> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    AnnotatedSentence s;
    s.tokens = tokenize(text);
    s.spans = model.tag(s.tokens);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

CharAnnotation char_record(const nlohmann::json& j) {
  CharAnnotation a;
  a.text = j.at("text").get<std::string>();
  for (const auto& span : j.at("spans")) {
    const std::size_t start = span.at("start");
    const std::size_t end = span.at("end");
    a.spans.push_back(EntitySpan{span.at("label"), start, end, utf8::substr(a.text, start, end)});
  }
  return a;
}

// True when every char span of the record starts and ends on token bounds.
bool on_token_bounds(const CharAnnotation& a, const TokenizedSentence& tokens) {
  for (const auto& span : a.spans) {
    const auto range = char_span_to_token_span(tokens, span.start, span.end);
    if (!range) return false;
    if (tokens.tokens[range->first].start != span.start || tokens.tokens[range->last].end != span.end) return false;
  }
  return true;
}

}  // namespace

EvaluationOutput evaluate_records(const std::vector<nlohmann::json>& gold, const std::vector<nlohmann::json>& pred,
                                  const std::optional<LabelMap>& gold_map, const std::optional<LabelMap>& pred_map,
                                  EvaluationLevel level) {
  if (gold.size() != pred.size()) {
    throw ShapeError("gold has " + std::to_string(gold.size()) + " sentences but prediction has " +
                     std::to_string(pred.size()));
  }
  std::vector<CharAnnotation> gold_chars, pred_chars;
  for (const auto& j : gold) gold_chars.push_back(char_record(j));
  for (const auto& j : pred) pred_chars.push_back(char_record(j));
  if (gold_map) gold_chars = map_labels(std::move(gold_chars), *gold_map);
  if (pred_map) pred_chars = map_labels(std::move(pred_chars), *pred_map);

  EvaluationOutput out;
  if (level != EvaluationLevel::Char) {
    std::vector<LabelSequence> gold_labels, pred_labels;
    for (std::size_t k = 0; k < gold.size() && out.token_note.empty(); ++k) {
      AnnotatedSentence g = annotated_from_json(gold[k]);
      AnnotatedSentence p = annotated_from_json(pred[k]);
      if (!on_token_bounds(gold_chars[k], g.tokens)) {
        out.token_note = "gold spans of sentence " + std::to_string(k) + " do not fall on token boundaries";
        break;
      }
      if (g.tokens.size() != p.tokens.size()) {
        throw ShapeError("sentence " + std::to_string(k) + ": gold has " + std::to_string(g.tokens.size()) +
                         " tokens but prediction has " + std::to_string(p.tokens.size()));
      }
      auto labels_of = [](const CharAnnotation& a, const TokenizedSentence& tokens) {
        LabelSequence labels(tokens.size(), std::string(kOutsideLabel));
        std::vector<bool> taken(tokens.size(), false);
        for (const auto& span : a.spans) {
          const auto range = char_span_to_token_span(tokens, span.start, span.end);
          if (!range) continue;
          for (std::size_t i = range->first; i <= range->last; ++i) {
            if (taken[i]) throw PreconditionError("overlapping spans at token " + std::to_string(i));
            taken[i] = true;
            labels[i] = span.label;
          }
        }
        return labels;
      };
      gold_labels.push_back(labels_of(gold_chars[k], g.tokens));
      pred_labels.push_back(labels_of(pred_chars[k], p.tokens));
    }
    if (out.token_note.empty()) out.token = token_metrics(gold_labels, pred_labels);
  }
  if (level != EvaluationLevel::Token) out.character = char_metrics(gold_chars, pred_chars);

  out.json["level"] = std::string(to_string(level));
  out.json["sentences"] = gold.size();
  if (level != EvaluationLevel::Char) {
    out.json["token"] = out.token ? report_to_json(*out.token) : ojson(nullptr);
    if (!out.token_note.empty()) out.json["token_note"] = out.token_note;
    out.table += out.token ? format_report_table(*out.token, "token-level") : "token-level\n    n/a\n";
  }
  if (out.character) {
    out.json["char"] = report_to_json(*out.character);
    if (!out.table.empty()) out.table += "\n";
    out.table += format_report_table(*out.character, "character-level");
  }
  return out;
}

namespace {

ojson history_json(const TrainingResult& result) {
  ojson epochs = ojson::array();
  for (const auto& e : result.history) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_accuracy", e.validation_accuracy}});
  }
  return {{"best_epoch", result.best_epoch},
          {"best_validation_accuracy", result.best_validation_accuracy},
          {"epochs", epochs}};
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(dir_ / name, content);
    outputs_[name] = digest_hex(content);
    log::info("artifact", {{"file", name}, {"bytes", content.size()}});
  }

  const std::map<std::string, std::string>& outputs() const { return outputs_; }

 private:
  fs::path dir_;
  std::map<std::string, std::string> outputs_;
};

std::vector<std::string> texts_of(const std::vector<AnnotatedSentence>& sentences) {
  std::vector<std::string> out;
  for (const auto& s : sentences) out.push_back(s.tokens.text);
  return out;
}

std::vector<nlohmann::json> as_records(const std::vector<AnnotatedSentence>& sentences) {
  std::vector<nlohmann::json> out;
  for (const auto& s : sentences) out.push_back(nlohmann::json::parse(annotated_to_json(s).dump()));
  return out;
}

}  // namespace

void run_pipeline(const PipelineConfig& config) {
  const fs::path out_dir = config.resolved(config.output_dir);
  ArtifactWriter writer(out_dir);
  ojson inputs = ojson::object();

  std::vector<CorpusFile> corpus_files;
  const auto docs = ingest_corpus(config.resolved(config.corpus_dir), &corpus_files);
  for (const auto& f : corpus_files) inputs["corpus/" + f.name] = f.digest;
  log::info("ingest", {{"documents", docs.size()}});

  SegmenterOptions seg;
  seg.abbreviations = config.abbreviations;
  auto sentences = sentencize(docs, seg);
  if (config.synthesize) {
    SyntheticValueSpec spec;
    spec.seed = config.synthesis_seed;
    spec.pattern = config.placeholder_pattern;
    sentences = synthesize_all(sentences, spec);
  }
  {
    std::vector<ojson> records;
    for (const auto& s : sentences) records.push_back(sentence_to_json(s));
    writer.write("sentences.jsonl", to_jsonl(records));
  }
  log::info("sentencize", {{"sentences", sentences.size()}});

  const fs::path parallel_path = config.resolved(config.parallel_file);
  inputs["parallel_file"] = digest_hex(read_file(parallel_path));
  const auto lines = read_parallel_lines(parallel_path);

  std::vector<AlignmentLinks> alignments;
  if (config.alignment_file) {
    const fs::path path = config.resolved(*config.alignment_file);
    inputs["alignment_file"] = digest_hex(read_file(path));
    alignments = read_pharaoh_file(path);
  } else {
    if (lines.size() != sentences.size()) {
      throw ShapeError(std::to_string(sentences.size()) + " sentences but " + std::to_string(lines.size()) +
                       " parallel lines");
    }
    std::vector<SentencePair> pairs;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      pairs.push_back({tokenize(sentences[k].text).surfaces(), tokenize(lines[k].target).surfaces()});
    }
    const ParallelCorpus corpus(std::move(pairs), config.aligner.max_sentence_length);
    const AlignerRun run = train_aligner(corpus, config.aligner);
    writer.write("aligner_model.json", to_json(run.model).dump(1) + "\n");
    writer.write("aligner_history.json", aligner_history_json(run).dump(2) + "\n");
    alignments = viterbi_align_all(run.model, corpus, config.aligner.workers);
    log::info("align", {{"pairs", corpus.size()}, {"log_likelihood", run.ibm2_log_likelihood.back()}});
  }
  writer.write("alignments.pharaoh", emit_pharaoh_file(alignments));

  ProjectionReport report;
  auto projected = project_corpus(sentences, lines, alignments, report);
  auto dataset = finalize_dataset(std::move(projected), config.dropped_labels, config.drop_empty, report);
  writer.write("dataset.jsonl", dataset_to_jsonl(dataset));
  writer.write("projection_report.json", report_to_json(report).dump(2) + "\n");
  log::info("project", {{"sentences_total", report.sentences_total}, {"sentences_kept", report.sentences_kept}});

  const DatasetSplit split = split_dataset(std::move(dataset), config.ratios, config.split_seed);
  writer.write("train.jsonl", dataset_to_jsonl(split.train));
  writer.write("validation.jsonl", dataset_to_jsonl(split.validation));
  writer.write("test.jsonl", dataset_to_jsonl(split.test));
  log::info("split", {{"train", split.train.size()}, {"validation", split.validation.size()}, {"test", split.test.size()}});

  if (config.train) {
    TaggerHyperparams hp = config.tagger;
    hp.seed = config.training_seed;
    const TagInventory inventory = inventory_for({&split.train, &split.validation});
    TrainingResult result = train_tagger(TaggerModel(hp, inventory), split.train, split.validation);
    writer.write("tagger.bin", result.model.serialize());
    writer.write("training_history.json", history_json(result).dump(2) + "\n");
    log::info("train", {{"best_epoch", result.best_epoch}, {"validation_accuracy", result.best_validation_accuracy}});

    if (config.evaluate) {
      const auto predictions = tag_texts(result.model, texts_of(split.test));
      writer.write("test_predictions.jsonl", dataset_to_jsonl(predictions));
      std::optional<LabelMap> gold_map;
      if (config.label_map) {
        const std::string content = read_file(config.resolved(*config.label_map));
        inputs["label_map"] = digest_hex(content);
        gold_map = LabelMap::parse(content);
      }
      const auto eval =
          evaluate_records(as_records(split.test), as_records(predictions), gold_map, std::nullopt, config.level);
      writer.write("report.json", eval.json.dump(2) + "\n");
      writer.write("report.txt", eval.table);
    }
  }

  ojson manifest;
  manifest["tool"] = "projner";
  manifest["version"] = kToolVersion;
  manifest["config"] = config_to_json(config);
  manifest["seeds"] = {{"synthesis", config.synthesis_seed}, {"split", config.split_seed}, {"training", config.training_seed}};
  manifest["inputs"] = inputs;
  manifest["outputs"] = writer.outputs();
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace projner
