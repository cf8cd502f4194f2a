#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "projner/aligner.hpp"
#include "projner/corpus.hpp"
#include "projner/projection.hpp"

namespace projner {

using ojson = nlohmann::ordered_json;

// Throws MissingInputError when the file does not exist.
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> read_lines(const std::filesystem::path& path);
// Each line of a JSON-lines file; blank lines are skipped. Throws ParseError
// naming the line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<ojson>& records);

// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string digest_hex(std::string_view bytes);

ojson document_to_json(const StandoffDocument& doc);
StandoffDocument document_from_json(const nlohmann::json& j);

// {"doc_id","doc_offset","text","spans":[{"label","start","end"}]}
ojson sentence_to_json(const Sentence& s);
// Surfaces are recomputed from the text and checked.
Sentence sentence_from_json(const nlohmann::json& j);

// {"text","tokens":[{"surface","start","end"}]}
ojson tokens_to_json(const TokenizedSentence& ts);

// {"text","tokens":[...],"spans":[{"label","first","last","start","end"}]}
ojson annotated_to_json(const AnnotatedSentence& s);
// Accepts dataset records, or sentence records without "tokens" (the text is
// then tokenized and char spans mapped onto tokens). Throws IntegrityError
// when the stored tokens or spans disagree with the text.
AnnotatedSentence annotated_from_json(const nlohmann::json& j);

ojson report_to_json(const ProjectionReport& report);

}  // namespace projner
