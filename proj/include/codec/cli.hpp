#pragma once

// Subcommands of the codec tool. Each returns the process exit code:
// 0 success, 1 fatal configuration error, 2 malformed input lines.

#include <iosfwd>
#include <string>
#include <vector>

#include "codec/pipeline.hpp"
#include "codec/planted.hpp"

namespace codec {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitMalformed = 2;

inline constexpr const char* kBridgeUrlEnv = "CODEC_BRIDGE_URL";

struct ProjectOptions {
  PipelineConfig cfg = PipelineConfig::for_mode(Mode::kTest);
  std::string scorer;
  std::string bridge_url;
  std::size_t workers = 1;
  bool timing = false;
};

int cmd_project(const ProjectOptions& opts, std::istream& in, std::ostream& out, std::ostream& err);

// Brute-force top-k over the unrestricted placement space; no pruning and no
// re-ranking.
int cmd_oracle(ProjectOptions opts, std::istream& in, std::ostream& out, std::ostream& err);

// Planted suite as ExampleRecords plus the gold sidecar.
void write_planted_suite(const PlantedSuiteSpec& spec, std::ostream& suite, std::ostream& gold);
std::string planted_scorer_spec(std::uint64_t seed, double noise);

struct GenOptions {
  PlantedSuiteSpec spec;
  std::string out;       // "-" writes the suite to stdout
  std::string gold_out;  // defaults to <out stem>.gold.jsonl
};
int cmd_gen(const GenOptions& opts, std::ostream& out, std::ostream& err);
std::string default_gold_path(const std::string& suite_path);

struct BenchOptions {
  std::string suite;
  std::string gold;
  std::string report;  // machine-readable report path; empty skips it
  std::vector<std::string> configs;
  PipelineConfig base = PipelineConfig::for_mode(Mode::kTest);
  std::string scorer;  // defaults to the sidecar's scorer
  std::string bridge_url;
  std::size_t workers = 1;
};
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace codec
