#include "projner/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <regex>
#include <sstream>

#include "projner/error.hpp"
#include "projner/random.hpp"
#include "projner/utf8.hpp"

namespace projner {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const auto pos = s.find(sep, begin);
    parts.push_back(s.substr(begin, pos == std::string_view::npos ? std::string_view::npos : pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return parts;
}

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

void check_span_integrity(std::string_view text, const std::vector<EntitySpan>& spans) {
  const std::size_t n = utf8::length(text);
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > n) {
      throw RangeError("span " + span.label + " [" + std::to_string(span.start) + ", " +
                       std::to_string(span.end) + ") out of range for text of length " + std::to_string(n));
    }
    if (utf8::substr(text, span.start, span.end) != span.surface) {
      throw IntegrityError("span " + span.label + " [" + std::to_string(span.start) + ", " +
                           std::to_string(span.end) + ") surface '" + span.surface +
                           "' does not match text '" + utf8::substr(text, span.start, span.end) + "'");
    }
  }
}

StandoffDocument parse_standoff(std::string_view text_content, std::string_view ann_content, std::string doc_id) {
  StandoffDocument doc{std::move(doc_id), std::string(text_content), {}};
  const std::size_t text_len = utf8::length(text_content);

  std::size_t line_no = 0;
  for (std::string_view line : split(ann_content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() != 'T') continue;

    const auto where = [&] { return "line " + std::to_string(line_no); };
    const auto fields = split(line, '\t');
    if (fields.size() < 3) throw ParseError(where() + ": expected 3 tab-separated fields");

    const std::string_view type_and_offsets = fields[1];
    const auto space = type_and_offsets.find(' ');
    if (space == std::string_view::npos || space == 0) throw ParseError(where() + ": missing label or offsets");
    const std::string label(type_and_offsets.substr(0, space));

    std::vector<std::pair<std::size_t, std::size_t>> fragments;
    for (std::string_view fragment : split(type_and_offsets.substr(space + 1), ';')) {
      const auto parts = split(fragment, ' ');
      std::size_t start = 0, end = 0;
      if (parts.size() != 2 || !parse_size(parts[0], start) || !parse_size(parts[1], end)) {
        throw ParseError(where() + ": malformed offsets '" + std::string(fragment) + "'");
      }
      if (start >= end || end > text_len) {
        throw RangeError(where() + ": offsets [" + std::to_string(start) + ", " + std::to_string(end) +
                         ") out of range for text of length " + std::to_string(text_len));
      }
      fragments.emplace_back(start, end);
    }

    // brat joins discontinuous fragments with a single space in the surface.
    std::string joined;
    for (std::size_t k = 0; k < fragments.size(); ++k) {
      if (k > 0) joined += ' ';
      joined += utf8::substr(text_content, fragments[k].first, fragments[k].second);
    }
    // The surface field may itself contain tabs only in malformed files.
    std::string surface(fields[2]);
    for (std::size_t k = 3; k < fields.size(); ++k) surface += "\t" + std::string(fields[k]);
    if (joined != surface) {
      throw IntegrityError(where() + ": surface '" + surface + "' does not match text '" + joined + "'");
    }
    for (auto [start, end] : fragments) {
      doc.spans.push_back(EntitySpan{label, start, end, utf8::substr(text_content, start, end)});
    }
  }
  return doc;
}

std::vector<Sentence> segment_sentences(const StandoffDocument& doc, const SegmenterOptions& options) {
  const std::u32string chars = utf8::decode(doc.text);
  const std::size_t n = chars.size();

  std::vector<std::u32string> abbreviations;
  for (const auto& a : options.abbreviations) abbreviations.push_back(utf8::decode(a));

  // Candidate cut points: (end of sentence, start of next sentence).
  struct Cut {
    std::size_t end;
    std::size_t next;
  };
  std::vector<Cut> cuts;
  for (std::size_t i = 0; i < n; ++i) {
    const char32_t c = chars[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < n && utf8::is_whitespace(chars[j])) ++j;
    if (j == i + 1 || j >= n) continue;
    if (!utf8::is_upper(chars[j]) && !utf8::is_digit(chars[j])) continue;
    if (c == '.') {
      if (i > 0 && utf8::is_digit(chars[i - 1])) continue;
      std::size_t w = i;
      while (w > 0 && !utf8::is_whitespace(chars[w - 1])) --w;
      const std::u32string_view word(chars.data() + w, i - w);
      if (std::find(abbreviations.begin(), abbreviations.end(), word) != abbreviations.end()) continue;
    }
    cuts.push_back(Cut{i + 1, j});
  }

  // Suppress cuts crossed by a span.
  std::erase_if(cuts, [&](const Cut& cut) {
    return std::any_of(doc.spans.begin(), doc.spans.end(),
                       [&](const EntitySpan& s) { return s.start < cut.next && s.end > cut.end; });
  });

  std::vector<Sentence> sentences;
  std::size_t region_start = 0;
  auto flush = [&](std::size_t region_end) {
    std::size_t b = region_start;
    std::size_t e = region_end;
    while (b < e && utf8::is_whitespace(chars[b])) ++b;
    while (e > b && utf8::is_whitespace(chars[e - 1])) --e;
    // Spans hanging into surrounding whitespace widen the sentence.
    for (const auto& s : doc.spans) {
      if (s.start >= region_start && s.end <= region_end) {
        b = std::min(b, s.start);
        e = std::max(e, s.end);
      }
    }
    if (b >= e) return;
    Sentence sentence;
    sentence.doc_id = doc.doc_id;
    sentence.doc_offset = b;
    sentence.text = utf8::encode(std::u32string_view(chars).substr(b, e - b));
    for (const auto& s : doc.spans) {
      if (s.start >= region_start && s.end <= region_end) {
        sentence.spans.push_back(EntitySpan{s.label, s.start - b, s.end - b, s.surface});
      }
    }
    sentences.push_back(std::move(sentence));
  };
  for (const auto& cut : cuts) {
    flush(cut.end);
    region_start = cut.end;
  }
  flush(n);
  return sentences;
}

std::string_view to_string(PlaceholderKind kind) {
  switch (kind) {
    case PlaceholderKind::PersonName: return "person-name";
    case PlaceholderKind::Date: return "date";
    case PlaceholderKind::Address: return "address";
    case PlaceholderKind::IdNumber: return "id-number";
    case PlaceholderKind::Other: return "other";
  }
  return "other";
}

PlaceholderKind placeholder_kind_for(std::string_view placeholder) {
  const std::string lower = lowercase_ascii(placeholder);
  if (lower.find("name") != std::string::npos) return PlaceholderKind::PersonName;
  if (lower.find("date") != std::string::npos) return PlaceholderKind::Date;
  if (lower.find("address") != std::string::npos) return PlaceholderKind::Address;
  if (lower.find("number") != std::string::npos) return PlaceholderKind::IdNumber;
  return PlaceholderKind::Other;
}

std::map<PlaceholderKind, std::vector<std::string>> SyntheticValueSpec::default_pools() {
  return {
      {PlaceholderKind::PersonName,
       {"Anna Schmidt", "John Miller", "Maria Weber", "Peter Brown", "Laura Fischer", "David Wilson",
        "Sarah Klein", "Thomas Young", "Julia Wagner", "Michael Hall"}},
      {PlaceholderKind::Date,
       {"2014-03-12", "2015-07-01", "2013-11-23", "2016-02-08", "2012-09-30", "2017-05-14", "2011-12-02",
        "2018-04-19"}},
      {PlaceholderKind::Address,
       {"12 Oak Street", "4 Lindenweg", "77 Harbor Road", "19 Mill Lane", "3 Bergstrasse", "58 Elm Avenue"}},
      {PlaceholderKind::IdNumber, {"483920", "117364", "902215", "650048", "338271", "774102"}},
      {PlaceholderKind::Other, {"Central Hospital", "County Clinic", "General Medical Center", "St Anne Hospital"}},
  };
}

std::string synthetic_value(const SyntheticValueSpec& spec, PlaceholderKind kind, std::size_t ordinal) {
  auto it = spec.pools.find(kind);
  if (it == spec.pools.end() || it->second.empty()) it = spec.pools.find(PlaceholderKind::Other);
  if (it == spec.pools.end() || it->second.empty()) {
    throw PreconditionError("no synthetic value pool for kind " + std::string(to_string(kind)));
  }
  const std::uint64_t h =
      splitmix64(spec.seed ^ splitmix64(fnv1a64(to_string(kind)) + static_cast<std::uint64_t>(ordinal)));
  return it->second[h % it->second.size()];
}

Sentence synthesize_placeholders(const Sentence& s, const SyntheticValueSpec& spec) {
  const std::regex pattern(spec.pattern);
  struct Site {
    std::size_t byte_begin, byte_end;  // in s.text
    std::size_t start, end;            // scalar offsets
  };
  std::vector<Site> sites;
  for (auto it = std::sregex_iterator(s.text.begin(), s.text.end(), pattern); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m.length(0) == 0) continue;
    const auto b = static_cast<std::size_t>(m.position(0));
    const auto e = b + static_cast<std::size_t>(m.length(0));
    sites.push_back(Site{b, e, utf8::scalar_offset(s.text, b), utf8::scalar_offset(s.text, e)});
  }
  if (sites.empty()) return s;

  for (const auto& site : sites) {
    for (const auto& span : s.spans) {
      if (span.start < site.end && span.end > site.start) {
        throw IntegrityError("placeholder '" + s.text.substr(site.byte_begin, site.byte_end - site.byte_begin) +
                             "' overlaps entity span " + span.label + " [" + std::to_string(span.start) + ", " +
                             std::to_string(span.end) + ")");
      }
    }
  }

  Sentence out = s;
  out.text.clear();
  std::size_t byte_cursor = 0;
  std::vector<long long> shift(s.spans.size(), 0);
  long long delta = 0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto& site = sites[k];
    const std::string placeholder = s.text.substr(site.byte_begin, site.byte_end - site.byte_begin);
    const std::string value = synthetic_value(spec, placeholder_kind_for(placeholder), k);
    out.text += s.text.substr(byte_cursor, site.byte_begin - byte_cursor);
    out.text += value;
    byte_cursor = site.byte_end;
    delta += static_cast<long long>(utf8::length(value)) - static_cast<long long>(site.end - site.start);
    for (std::size_t i = 0; i < s.spans.size(); ++i) {
      if (s.spans[i].start >= site.end) shift[i] = delta;
    }
  }
  out.text += s.text.substr(byte_cursor);
  for (std::size_t i = 0; i < out.spans.size(); ++i) {
    out.spans[i].start = static_cast<std::size_t>(static_cast<long long>(out.spans[i].start) + shift[i]);
    out.spans[i].end = static_cast<std::size_t>(static_cast<long long>(out.spans[i].end) + shift[i]);
  }
  check_span_integrity(out.text, out.spans);
  return out;
}

std::uint64_t derive_sentence_seed(std::uint64_t seed, std::string_view doc_id, std::size_t doc_offset) {
  return splitmix64(seed ^ splitmix64(fnv1a64(doc_id) ^ splitmix64(static_cast<std::uint64_t>(doc_offset))));
}

}  // namespace projner
