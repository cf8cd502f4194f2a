#include "projner/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "projner/error.hpp"
#include "projner/random.hpp"
#include "projner/utf8.hpp"

namespace projner {

std::string read_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInputError("input not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open input: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<std::string> lines;
  std::size_t begin = 0;
  while (begin < content.size()) {
    auto end = content.find('\n', begin);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    begin = end + 1;
  }
  return lines;
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<ojson>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::string digest_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace {

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

ojson document_to_json(const StandoffDocument& doc) {
  ojson spans = ojson::array();
  for (const auto& s : doc.spans) {
    spans.push_back({{"label", s.label}, {"start", s.start}, {"end", s.end}, {"surface", s.surface}});
  }
  return {{"doc_id", doc.doc_id}, {"text", doc.text}, {"spans", spans}};
}

StandoffDocument document_from_json(const nlohmann::json& j) {
  return guarded("document record", [&] {
    StandoffDocument doc{j.at("doc_id"), j.at("text"), {}};
    for (const auto& s : j.at("spans")) {
      const std::size_t start = s.at("start");
      const std::size_t end = s.at("end");
      if (start >= end || end > utf8::length(doc.text)) throw RangeError("document span out of range");
      doc.spans.push_back(EntitySpan{s.at("label"), start, end, utf8::substr(doc.text, start, end)});
    }
    check_span_integrity(doc.text, doc.spans);
    return doc;
  });
}

ojson sentence_to_json(const Sentence& s) {
  ojson spans = ojson::array();
  for (const auto& span : s.spans) spans.push_back({{"label", span.label}, {"start", span.start}, {"end", span.end}});
  return {{"doc_id", s.doc_id}, {"doc_offset", s.doc_offset}, {"text", s.text}, {"spans", spans}};
}

Sentence sentence_from_json(const nlohmann::json& j) {
  return guarded("sentence record", [&] {
    Sentence s;
    s.doc_id = j.value("doc_id", std::string{});
    s.doc_offset = j.value("doc_offset", std::size_t{0});
    s.text = j.at("text");
    const std::size_t n = utf8::length(s.text);
    for (const auto& span : j.at("spans")) {
      const std::size_t start = span.at("start");
      const std::size_t end = span.at("end");
      if (start >= end || end > n) {
        throw RangeError("sentence span [" + std::to_string(start) + ", " + std::to_string(end) + ") out of range");
      }
      s.spans.push_back(EntitySpan{span.at("label"), start, end, utf8::substr(s.text, start, end)});
    }
    return s;
  });
}

ojson tokens_to_json(const TokenizedSentence& ts) {
  ojson tokens = ojson::array();
  for (const auto& t : ts.tokens) tokens.push_back({{"surface", t.surface}, {"start", t.start}, {"end", t.end}});
  return {{"text", ts.text}, {"tokens", tokens}};
}

ojson annotated_to_json(const AnnotatedSentence& s) {
  ojson j = tokens_to_json(s.tokens);
  ojson spans = ojson::array();
  for (const auto& span : s.spans) {
    spans.push_back({{"label", span.label},
                     {"first", span.first},
                     {"last", span.last},
                     {"start", span.start},
                     {"end", span.end}});
  }
  j["spans"] = spans;
  return j;
}

AnnotatedSentence annotated_from_json(const nlohmann::json& j) {
  return guarded("dataset record", [&] {
    AnnotatedSentence s;
    const std::string text = j.at("text");
    s.tokens = tokenize(text);
    if (j.contains("tokens")) {
      TokenizedSentence stored{text, {}};
      for (const auto& t : j.at("tokens")) stored.tokens.push_back(Token{t.at("surface"), t.at("start"), t.at("end")});
      for (const auto& t : stored.tokens) {
        if (t.start >= t.end || utf8::substr(text, t.start, t.end) != t.surface) {
          throw IntegrityError("token '" + t.surface + "' does not match the record text");
        }
      }
      s.tokens = std::move(stored);
    }
    for (const auto& span : j.at("spans")) {
      const std::string label = span.at("label");
      if (span.contains("first")) {
        const std::size_t first = span.at("first");
        const std::size_t last = span.at("last");
        s.spans.push_back(make_token_span(s.tokens, label, first, last));
        if (span.contains("start") && (span.at("start") != s.spans.back().start || span.at("end") != s.spans.back().end)) {
          throw IntegrityError("span char bounds disagree with its token range");
        }
      } else {
        const auto range = char_span_to_token_span(s.tokens, span.at("start"), span.at("end"));
        if (!range) continue;
        s.spans.push_back(make_token_span(s.tokens, label, range->first, range->last));
      }
    }
    return s;
  });
}

ojson report_to_json(const ProjectionReport& report) {
  ojson labels = ojson::object();
  LabelTally total;
  for (const auto& [label, t] : report.per_label) {
    labels[label] = {{"projected", t.projected},
                     {"widened", t.widened},
                     {"widened_subword", t.widened_subword},
                     {"noncontiguous", t.noncontiguous},
                     {"dropped", t.dropped}};
    total.projected += t.projected;
    total.widened += t.widened;
    total.widened_subword += t.widened_subword;
    total.noncontiguous += t.noncontiguous;
    total.dropped += t.dropped;
  }
  return {{"sentences_total", report.sentences_total},
          {"sentences_kept", report.sentences_kept},
          {"spans_removed_by_label", report.spans_removed_by_label},
          {"spans_removed_by_overlap", report.spans_removed_by_overlap},
          {"totals",
           {{"projected", total.projected},
            {"widened", total.widened},
            {"widened_subword", total.widened_subword},
            {"noncontiguous", total.noncontiguous},
            {"dropped", total.dropped}}},
          {"labels", labels}};
}

}  // namespace projner
