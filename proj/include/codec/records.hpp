#pragma once

// JSONL wire formats of the command-line tool.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "codec/pipeline.hpp"
#include "codec/types.hpp"

namespace codec {

using Json = nlohmann::ordered_json;

/// One input line: a labeled source sentence and its translation template.
struct ExampleRecord {
  std::string id;
  std::vector<std::string> source_tokens;
  std::vector<LabeledSpan> spans;
  std::vector<std::string> template_tokens;
  std::vector<std::string> span_translations;  // optional, one per span
};

// Throws ValidationError on malformed JSON or schema violations.
ExampleRecord parse_example_record(std::string_view line);
Json to_json(const ExampleRecord& record);

struct EncodedExample {
  SourceExample source;
  Template tmpl;
};
EncodedExample encode(const ExampleRecord& record, const Vocabulary& vocab);

// ResultRecord. Dropped examples carry no projected spans. wall_ms is only
// measured when `timing` is set so that default output is reproducible.
Json result_record(std::string_view id, SearchKind search, const ProjectionResult& result,
                   bool timing);

/// Sidecar line of a generated suite.
struct GoldRecord {
  std::string id;
  std::string scorer;
  std::vector<Placement> gold;
};
GoldRecord parse_gold_record(std::string_view line);
Json to_json(const GoldRecord& record);

}  // namespace codec
