#include "codec/records.hpp"

#include <cmath>

namespace codec {

namespace {

const Json& require(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

std::vector<std::string> string_list(const Json& value, const char* key) {
  if (!value.is_array()) throw ValidationError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_string())
      throw ValidationError(std::string("field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::size_t index(const Json& value, const char* key) {
  if (!value.is_number_integer() || value.get<long long>() < 0)
    throw ValidationError(std::string("field '") + key + "' must be a non-negative integer");
  return value.get<std::size_t>();
}

Json parse_object(std::string_view line) {
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ValidationError("record must be a JSON object");
  return obj;
}

Json number_or_null(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace

ExampleRecord parse_example_record(std::string_view line) {
  const Json obj = parse_object(line);
  ExampleRecord rec;
  const auto& id = require(obj, "id");
  if (!id.is_string()) throw ValidationError("field 'id' must be a string");
  rec.id = id.get<std::string>();
  rec.source_tokens = string_list(require(obj, "source_tokens"), "source_tokens");
  rec.template_tokens = string_list(require(obj, "template_tokens"), "template_tokens");
  const auto& spans = require(obj, "spans");
  if (!spans.is_array()) throw ValidationError("field 'spans' must be an array");
  for (const auto& s : spans) {
    if (!s.is_object()) throw ValidationError("span must be an object");
    LabeledSpan span;
    span.start = index(require(s, "start"), "start");
    span.end = index(require(s, "end"), "end");
    const auto& label = require(s, "label");
    if (!label.is_string()) throw ValidationError("field 'label' must be a string");
    span.label = label.get<std::string>();
    rec.spans.push_back(std::move(span));
  }
  if (auto it = obj.find("span_translations"); it != obj.end() && !it->is_null()) {
    rec.span_translations = string_list(*it, "span_translations");
    if (rec.span_translations.size() != rec.spans.size())
      throw ValidationError("span_translations must have one entry per span");
  }
  if (rec.template_tokens.empty() && !rec.spans.empty())
    throw ValidationError("template_tokens must be non-empty when spans are present");
  return rec;
}

Json to_json(const ExampleRecord& record) {
  Json spans = Json::array();
  for (const auto& s : record.spans)
    spans.push_back({{"start", s.start}, {"end", s.end}, {"label", s.label}});
  Json out = {{"id", record.id},
              {"source_tokens", record.source_tokens},
              {"spans", spans},
              {"template_tokens", record.template_tokens}};
  if (!record.span_translations.empty()) out["span_translations"] = record.span_translations;
  return out;
}

EncodedExample encode(const ExampleRecord& record, const Vocabulary& vocab) {
  EncodedExample out;
  out.source.tokens = vocab.encode(record.source_tokens);
  out.source.spans = record.spans;
  out.tmpl.tokens = vocab.encode(record.template_tokens);
  out.source.validate();
  out.tmpl.validate();
  return out;
}

Json result_record(std::string_view id, SearchKind search, const ProjectionResult& result,
                   bool timing) {
  Json spans = Json::array();
  if (!result.dropped()) {
    for (const auto& s : result.spans) {
      Json topk = Json::array();
      for (const auto& h : s.topk) {
        topk.push_back({{"open_gap", h.placement.open_gap},
                        {"close_gap", h.placement.close_gap},
                        {"score", h.score}});
      }
      Json entry;
      entry["label"] = s.label;
      entry["open_gap"] = s.placement ? Json(s.placement->open_gap) : Json(nullptr);
      entry["close_gap"] = s.placement ? Json(s.placement->close_gap) : Json(nullptr);
      entry["hyp_score"] = number_or_null(s.hyp_score);
      entry["span_score"] = number_or_null(s.span_score);
      entry["topk"] = std::move(topk);
      spans.push_back(std::move(entry));
    }
  }
  const auto& d = result.diagnostics;
  Json diagnostics = {{"nodes_expanded", d.nodes_expanded},
                      {"scorer_calls", d.scorer_calls},
                      {"bound_pruned", d.bound_pruned},
                      {"gap_pruned", d.gap_pruned},
                      {"completed", d.completed},
                      {"wall_ms", timing ? d.wall_ms() : 0.0}};
  return {{"id", id},
          {"search", to_string(search)},
          {"status", to_string(result.status)},
          {"projected_spans", std::move(spans)},
          {"diagnostics", std::move(diagnostics)}};
}

GoldRecord parse_gold_record(std::string_view line) {
  const Json obj = parse_object(line);
  GoldRecord rec;
  const auto& id = require(obj, "id");
  if (!id.is_string()) throw ValidationError("field 'id' must be a string");
  rec.id = id.get<std::string>();
  if (auto it = obj.find("scorer"); it != obj.end() && it->is_string()) rec.scorer = it->get<std::string>();
  const auto& gold = require(obj, "gold");
  if (!gold.is_array()) throw ValidationError("field 'gold' must be an array");
  for (const auto& g : gold) {
    if (!g.is_object()) throw ValidationError("gold placement must be an object");
    rec.gold.push_back({index(require(g, "open_gap"), "open_gap"), index(require(g, "close_gap"), "close_gap")});
  }
  return rec;
}

Json to_json(const GoldRecord& record) {
  Json gold = Json::array();
  for (const auto& p : record.gold) gold.push_back({{"open_gap", p.open_gap}, {"close_gap", p.close_gap}});
  return {{"id", record.id}, {"scorer", record.scorer}, {"gold", std::move(gold)}};
}

}  // namespace codec
