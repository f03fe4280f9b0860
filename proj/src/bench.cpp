#include "codec/bench.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "codec/parallel.hpp"

namespace codec {

namespace {

std::size_t parse_size(std::string_view text, const std::string& name) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0)
    throw ValidationError("invalid bench config '" + name + "'");
  return value;
}

bool consume_suffix(std::string_view& text, std::string_view suffix) {
  if (!text.ends_with(suffix)) return false;
  text.remove_suffix(suffix.size());
  return true;
}

}  // namespace

std::vector<std::string> default_arm_names() {
  return {"exact", "exact+rerank", "delta=1", "delta=3", "delta=1+[", "delta=3+["};
}

BenchArm parse_arm(const std::string& name, const PipelineConfig& base) {
  BenchArm arm{name, base};
  auto& cfg = arm.cfg;
  cfg.prune.enabled = false;
  cfg.rerank = true;
  std::string_view text = name;
  const bool csbs_rerank = consume_suffix(text, "+rerank") && text.starts_with("csbs=");
  if (!csbs_rerank) text = name;
  if (consume_suffix(text, "+[")) cfg.prune.enabled = true;
  if (text == "exact" || text == "exact+rerank") {
    cfg.search = SearchKind::kExact;
    cfg.rerank = text == "exact+rerank";
  } else if (text == "oracle") {
    cfg.search = SearchKind::kOracle;
    cfg.rerank = false;
  } else if (text.starts_with("delta=")) {
    cfg.search = SearchKind::kCodec;
    cfg.search_cfg.delta = parse_size(text.substr(6), name);
  } else if (text.starts_with("csbs=")) {
    cfg.search = SearchKind::kCsbs;
    cfg.beam = parse_size(text.substr(5), name);
    cfg.rerank = csbs_rerank;
  } else {
    throw ValidationError("unknown bench config '" + name + "'");
  }
  return arm;
}

std::vector<BenchCase> planted_cases(std::span<const PlantedInstance> suite) {
  std::vector<BenchCase> out;
  out.reserve(suite.size());
  for (const auto& inst : suite)
    out.push_back({inst.id, inst.example.source, inst.example.tmpl, inst.example.gold, inst.scorer});
  return out;
}

BenchRow run_arm(std::span<const BenchCase> cases, const BenchArm& arm, std::size_t workers) {
  struct Outcome {
    std::size_t spans = 0;
    std::size_t top1 = 0;
    std::size_t in_topk = 0;
    Diagnostics diagnostics;
  };
  std::vector<Outcome> outcomes(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    const auto& c = cases[i];
    const auto result = project(c.example, c.tmpl, *c.scorer, arm.cfg);
    auto& out = outcomes[i];
    out.diagnostics = result.diagnostics;
    for (std::size_t s = 0; s < result.spans.size() && s < c.gold.size(); ++s) {
      const auto& span = result.spans[s];
      ++out.spans;
      if (!result.dropped() && span.placement && *span.placement == c.gold[s]) ++out.top1;
      for (const auto& h : span.topk) {
        if (h.placement == c.gold[s]) {
          ++out.in_topk;
          break;
        }
      }
    }
  });

  BenchRow row;
  row.name = arm.name;
  row.examples = cases.size();
  std::size_t top1 = 0, in_topk = 0;
  double nodes = 0, calls = 0, wall = 0;
  for (const auto& o : outcomes) {
    row.spans += o.spans;
    top1 += o.top1;
    in_topk += o.in_topk;
    nodes += static_cast<double>(o.diagnostics.nodes_expanded);
    calls += static_cast<double>(o.diagnostics.scorer_calls);
    wall += o.diagnostics.wall_ms();
  }
  if (row.spans > 0) {
    row.gold_top1_accuracy = static_cast<double>(top1) / static_cast<double>(row.spans);
    row.gold_in_topk_rate = static_cast<double>(in_topk) / static_cast<double>(row.spans);
  }
  if (row.examples > 0) {
    const auto n = static_cast<double>(row.examples);
    row.mean_nodes = nodes / n;
    row.mean_scorer_calls = calls / n;
    row.mean_wall_ms = wall / n;
  }
  return row;
}

BenchReport run_bench(std::span<const BenchCase> cases, std::span<const BenchArm> arms,
                      std::size_t workers) {
  BenchReport report;
  for (const auto& arm : arms) report.rows.push_back(run_arm(cases, arm, workers));
  return report;
}

Json to_json(const BenchReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"config", r.name},
                    {"gold_top1_accuracy", r.gold_top1_accuracy},
                    {"gold_in_topk_rate", r.gold_in_topk_rate},
                    {"mean_nodes", r.mean_nodes},
                    {"mean_scorer_calls", r.mean_scorer_calls},
                    {"mean_wall_ms", r.mean_wall_ms},
                    {"examples", r.examples},
                    {"spans", r.spans}});
  }
  return {{"rows", std::move(rows)}};
}

std::string format_table(const BenchReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %10s %10s %12s %14s %12s\n", "config", "top1_acc",
                "in_topk", "mean_nodes", "mean_calls", "mean_wall_ms");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-16s %10.4f %10.4f %12.2f %14.2f %12.3f\n", r.name.c_str(),
                  r.gold_top1_accuracy, r.gold_in_topk_rate, r.mean_nodes, r.mean_scorer_calls,
                  r.mean_wall_ms);
    out << line;
  }
  return out.str();
}

}  // namespace codec
