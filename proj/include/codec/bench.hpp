#pragma once

// Ablation harness: runs a suite with gold placements under several search
// configurations and reports accuracy and cost per configuration.
//
// Arm names:
//   exact           exact bound, no pruning, no re-ranking
//   exact+rerank    exact bound with re-ranking
//   delta=N         heuristic bound with window N, re-ranking
//   delta=N+[       as above with opening-marker pruning
//   csbs=N          constrained beam search with beam N, best beam hypothesis
//   csbs=N+rerank   as above with re-ranking
//   oracle          brute-force enumeration, no re-ranking

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "codec/pipeline.hpp"
#include "codec/planted.hpp"
#include "codec/records.hpp"

namespace codec {

struct BenchArm {
  std::string name;
  PipelineConfig cfg;
};

// Throws ValidationError for an unknown name.
BenchArm parse_arm(const std::string& name, const PipelineConfig& base);
std::vector<std::string> default_arm_names();

struct BenchCase {
  std::string id;
  SourceExample example;
  Template tmpl;
  std::vector<Placement> gold;  // one per span
  std::shared_ptr<const Scorer> scorer;
};

std::vector<BenchCase> planted_cases(std::span<const PlantedInstance> suite);

struct BenchRow {
  std::string name;
  double gold_top1_accuracy = 0.0;
  double gold_in_topk_rate = 0.0;
  double mean_nodes = 0.0;
  double mean_scorer_calls = 0.0;
  double mean_wall_ms = 0.0;
  std::size_t examples = 0;
  std::size_t spans = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

BenchRow run_arm(std::span<const BenchCase> cases, const BenchArm& arm, std::size_t workers = 1);
BenchReport run_bench(std::span<const BenchCase> cases, std::span<const BenchArm> arms,
                      std::size_t workers = 1);

Json to_json(const BenchReport& report);
std::string format_table(const BenchReport& report);

}  // namespace codec
