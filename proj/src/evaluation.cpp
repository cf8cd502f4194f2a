#include "projner/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "projner/error.hpp"
#include "projner/utf8.hpp"

namespace projner {

ClassScore make_class_score(std::string label, std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScore s{std::move(label), tp, fp, fn, 0.0, 0.0, 0.0};
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision + s.recall > 0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

namespace {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

EvaluationReport build_report(const std::map<std::string, Counts>& counts, std::vector<std::string> classes) {
  if (classes.empty()) {
    for (const auto& [label, c] : counts) classes.push_back(label);
  }
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::erase(classes, std::string(kOutsideLabel));

  EvaluationReport report;
  double wp = 0, wr = 0, wf = 0;
  for (const auto& label : classes) {
    const auto it = counts.find(label);
    const Counts c = it == counts.end() ? Counts{} : it->second;
    report.per_class.push_back(make_class_score(label, c.tp, c.fp, c.fn));
    const auto& s = report.per_class.back();
    const auto support = static_cast<double>(s.support());
    wp += support * s.precision;
    wr += support * s.recall;
    wf += support * s.f1;
    report.total.support += s.support();
  }
  if (report.total.support > 0) {
    const auto total = static_cast<double>(report.total.support);
    report.total.precision = wp / total;
    report.total.recall = wr / total;
    report.total.f1 = wf / total;
  }
  return report;
}

void count_pair(const LabelSequence& gold, const LabelSequence& pred, std::map<std::string, Counts>& counts) {
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    const auto& p = pred[i];
    if (g == p) {
      if (g != kOutsideLabel) counts[g].tp++;
      continue;
    }
    if (g != kOutsideLabel) counts[g].fn++;
    if (p != kOutsideLabel) counts[p].fp++;
  }
}

}  // namespace

LabelSequence token_labels(const AnnotatedSentence& sentence) {
  LabelSequence labels(sentence.tokens.size(), std::string(kOutsideLabel));
  std::vector<bool> taken(sentence.tokens.size(), false);
  for (const auto& span : sentence.spans) {
    if (span.first > span.last || span.last >= labels.size()) throw RangeError("span outside the sentence tokens");
    for (std::size_t i = span.first; i <= span.last; ++i) {
      if (taken[i]) throw PreconditionError("overlapping spans at token " + std::to_string(i));
      taken[i] = true;
      labels[i] = span.label;
    }
  }
  return labels;
}

EvaluationReport token_metrics(const std::vector<LabelSequence>& gold, const std::vector<LabelSequence>& pred,
                               std::vector<std::string> classes) {
  if (gold.size() != pred.size()) {
    throw ShapeError("gold has " + std::to_string(gold.size()) + " sentences but prediction has " +
                     std::to_string(pred.size()));
  }
  std::map<std::string, Counts> counts;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].size() != pred[k].size()) {
      throw ShapeError("sentence " + std::to_string(k) + ": gold has " + std::to_string(gold[k].size()) +
                       " tokens but prediction has " + std::to_string(pred[k].size()));
    }
    count_pair(gold[k], pred[k], counts);
  }
  return build_report(counts, std::move(classes));
}

CharAnnotation char_annotation(const AnnotatedSentence& sentence) {
  CharAnnotation out{sentence.tokens.text, {}};
  for (const auto& s : sentence.spans) {
    out.spans.push_back(EntitySpan{s.label, s.start, s.end, utf8::substr(out.text, s.start, s.end)});
  }
  return out;
}

LabelSequence char_labels(const CharAnnotation& annotation) {
  const std::size_t n = utf8::length(annotation.text);
  LabelSequence labels(n, std::string(kOutsideLabel));
  std::vector<bool> taken(n, false);
  for (const auto& span : annotation.spans) {
    if (span.start >= span.end || span.end > n) throw RangeError("character span outside the text");
    for (std::size_t i = span.start; i < span.end; ++i) {
      if (taken[i]) throw PreconditionError("overlapping spans at character " + std::to_string(i));
      taken[i] = true;
      labels[i] = span.label;
    }
  }
  return labels;
}

EvaluationReport char_metrics(const std::vector<CharAnnotation>& gold, const std::vector<CharAnnotation>& pred,
                              std::vector<std::string> classes) {
  if (gold.size() != pred.size()) {
    throw ShapeError("gold has " + std::to_string(gold.size()) + " sentences but prediction has " +
                     std::to_string(pred.size()));
  }
  std::map<std::string, Counts> counts;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].text != pred[k].text) {
      throw IntegrityError("sentence " + std::to_string(k) + ": gold and prediction texts differ");
    }
    count_pair(char_labels(gold[k]), char_labels(pred[k]), counts);
  }
  return build_report(counts, std::move(classes));
}

EvaluationReport char_metrics(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& pred,
                              std::vector<std::string> classes) {
  std::vector<CharAnnotation> g, p;
  for (const auto& s : gold) g.push_back(char_annotation(s));
  for (const auto& s : pred) p.push_back(char_annotation(s));
  return char_metrics(g, p, std::move(classes));
}

LabelMap LabelMap::parse(std::string_view content) {
  std::map<std::string, std::optional<std::string>> mapping;
  std::size_t line_no = 0;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("label map line " + std::to_string(line_no) + ": missing '='");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string{};
      return s.substr(b, s.find_last_not_of(" \t") - b + 1);
    };
    const std::string external = trim(line.substr(0, eq));
    const std::string internal = trim(line.substr(eq + 1));
    if (external.empty()) throw ConfigError("label map line " + std::to_string(line_no) + ": empty external label");
    if (mapping.count(external)) {
      throw ConfigError("label map line " + std::to_string(line_no) + ": duplicate label '" + external + "'");
    }
    mapping[external] = internal.empty() ? std::nullopt : std::optional<std::string>(internal);
  }
  return LabelMap(std::move(mapping));
}

LabelMap LabelMap::identity(const std::vector<std::string>& labels) {
  std::map<std::string, std::optional<std::string>> mapping;
  for (const auto& l : labels) mapping[l] = l;
  return LabelMap(std::move(mapping));
}

namespace {

template <typename Span>
void check_covered(const std::vector<std::vector<Span>*>& span_sets, const LabelMap& map) {
  std::set<std::string> missing;
  for (const auto* spans : span_sets) {
    for (const auto& s : *spans) {
      if (!map.mapping().count(s.label)) missing.insert(s.label);
    }
  }
  if (missing.empty()) return;
  std::string list;
  for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
  throw ConfigError("label map does not cover: " + list);
}

template <typename Span>
void apply_map(std::vector<Span>& spans, const LabelMap& map) {
  std::erase_if(spans, [&](const Span& s) { return !map.mapping().at(s.label); });
  for (auto& s : spans) s.label = *map.mapping().at(s.label);
}

}  // namespace

std::vector<AnnotatedSentence> map_labels(std::vector<AnnotatedSentence> sentences, const LabelMap& map) {
  std::vector<std::vector<TokenSpan>*> sets;
  for (auto& s : sentences) sets.push_back(&s.spans);
  check_covered(sets, map);
  for (auto& s : sentences) apply_map(s.spans, map);
  return sentences;
}

std::vector<CharAnnotation> map_labels(std::vector<CharAnnotation> annotations, const LabelMap& map) {
  std::vector<std::vector<EntitySpan>*> sets;
  for (auto& a : annotations) sets.push_back(&a.spans);
  check_covered(sets, map);
  for (auto& a : annotations) apply_map(a.spans, map);
  return annotations;
}

ojson report_to_json(const EvaluationReport& report) {
  ojson classes = ojson::array();
  for (const auto& s : report.per_class) {
    classes.push_back({{"label", s.label},
                       {"tp", s.tp},
                       {"fp", s.fp},
                       {"fn", s.fn},
                       {"support", s.support()},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1}});
  }
  return {{"per_class", classes},
          {"total",
           {{"precision", report.total.precision},
            {"recall", report.total.recall},
            {"f1", report.total.f1},
            {"support", report.total.support}}}};
}

std::string format_report_table(const EvaluationReport& report, std::string_view title) {
  std::size_t width = 8;
  for (const auto& s : report.per_class) width = std::max(width, s.label.size() + 2);
  std::ostringstream out;
  char buf[64];
  auto cell = [&](const std::string& text) {
    out << std::string(width > text.size() ? width - text.size() : 1, ' ') << text;
  };
  out << title << "\n" << "    ";
  for (const auto& s : report.per_class) cell(s.label);
  cell("Total");
  out << "\n";
  const char* names[] = {"Pr", "Re", "F1"};
  for (int row = 0; row < 3; ++row) {
    out << names[row] << "  ";
    for (const auto& s : report.per_class) {
      std::snprintf(buf, sizeof(buf), "%.3f", row == 0 ? s.precision : row == 1 ? s.recall : s.f1);
      cell(buf);
    }
    const auto& t = report.total;
    std::snprintf(buf, sizeof(buf), "%.3f", row == 0 ? t.precision : row == 1 ? t.recall : t.f1);
    cell(buf);
    out << "\n";
  }
  return out.str();
}

}  // namespace projner
