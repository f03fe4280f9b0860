// codec: constrained-decoding label projection.
//
//   codec project --scorer table:fixture.tsv < examples.jsonl > results.jsonl
//   codec oracle  --scorer planted:42 < examples.jsonl
//   codec gen     --seed 42 --count 20 --out suite.jsonl
//   codec bench   --suite suite.jsonl --gold suite.gold.jsonl

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "codec/cli.hpp"

namespace {

using namespace codec;

// Search and pipeline flags shared by project, oracle and bench. Values are
// collected first and applied on top of the mode defaults afterwards, so
// --mode never overrides an explicit flag.
struct EngineFlags {
  std::string mode = "test";
  std::string search = "codec";
  std::optional<std::size_t> k, delta, batch_size, beam;
  std::optional<double> alpha1, alpha2, sigma;
  bool no_prune = false, no_rerank = false, no_filter = false, allow_empty = false;

  void add(CLI::App& app) {
    app.add_option("--mode", mode, "train or test; sets delta, overlap and filter defaults")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();
    app.add_option("--search", search, "search algorithm")
        ->check(CLI::IsMember({"codec", "exact", "csbs", "oracle"}))
        ->capture_default_str();
    app.add_option("--k", k, "hypotheses kept per span (default 5)")->check(CLI::PositiveNumber);
    app.add_option("--delta", delta, "heuristic bound window (default 1 train, 5 test)");
    app.add_option("--alpha1", alpha1, "strong opening-marker threshold (default 0.5)");
    app.add_option("--alpha2", alpha2, "neighbour opening-marker threshold (default 0.1)");
    app.add_option("--sigma", sigma, "neighbour window in tokens (default 5)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--batch-size", batch_size, "partial hypotheses scored per call (default 16)")
        ->check(CLI::PositiveNumber);
    app.add_option("--beam", beam, "beam size for --search csbs (default 16)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--no-prune", no_prune, "disable opening-marker pruning");
    app.add_flag("--no-rerank", no_rerank, "return the most probable hypothesis");
    app.add_flag("--no-filter", no_filter, "disable translate-train filtering");
    app.add_flag("--allow-empty-spans", allow_empty, "allow OPEN and CLOSE in the same gap");
  }

  PipelineConfig build() const {
    auto cfg = PipelineConfig::for_mode(mode == "train" ? Mode::kTrain : Mode::kTest);
    static const std::map<std::string, SearchKind> kinds = {{"codec", SearchKind::kCodec},
                                                            {"exact", SearchKind::kExact},
                                                            {"csbs", SearchKind::kCsbs},
                                                            {"oracle", SearchKind::kOracle}};
    cfg.search = kinds.at(search);
    if (k) cfg.search_cfg.k = *k;
    if (delta) cfg.search_cfg.delta = *delta;
    if (batch_size) cfg.search_cfg.batch_size = *batch_size;
    if (beam) cfg.beam = *beam;
    if (alpha1) cfg.prune.alpha1 = *alpha1;
    if (alpha2) cfg.prune.alpha2 = *alpha2;
    if (sigma) cfg.prune.sigma = static_cast<std::size_t>(*sigma);
    if (no_prune) cfg.prune.enabled = false;
    if (no_rerank) cfg.rerank = false;
    if (no_filter) cfg.filter.enabled = false;
    cfg.search_cfg.allow_empty_spans = allow_empty;
    return cfg;
  }
};

struct ScorerFlags {
  std::string scorer;
  std::string bridge_url;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void add(CLI::App& app) {
    app.add_option("--scorer", scorer, "table:<path> | planted[:<seed>[:<noise>]] | bridge[:<url>]");
    app.add_option("--bridge-url", bridge_url, "scorer bridge URL (env CODEC_BRIDGE_URL)");
    app.add_option("--seed", seed, "seed for a bare 'planted' scorer")->capture_default_str();
    app.add_option("--workers", workers, "records processed in parallel")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  std::string spec() const {
    if (scorer == "planted") return "planted:" + std::to_string(seed);
    return scorer;
  }
};

int with_io(const std::string& input, const std::string& output,
            const std::function<int(std::istream&, std::ostream&)>& run) {
  std::ifstream fin;
  std::ofstream fout;
  std::istream* in = &std::cin;
  std::ostream* out = &std::cout;
  if (!input.empty() && input != "-") {
    fin.open(input, std::ios::binary);
    if (!fin) {
      std::cerr << "error: cannot read " << input << "\n";
      return kExitFatal;
    }
    in = &fin;
  }
  if (!output.empty() && output != "-") {
    fout.open(output, std::ios::binary);
    if (!fout) {
      std::cerr << "error: cannot write " << output << "\n";
      return kExitFatal;
    }
    out = &fout;
  }
  return run(*in, *out);
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  CLI::App app{"Constrained-decoding label projection"};
  app.require_subcommand(1);

  EngineFlags project_engine, oracle_engine, bench_engine;
  ScorerFlags project_scorer, oracle_scorer, bench_scorer;
  std::string project_in, project_out, oracle_in, oracle_out;
  bool timing = false;

  auto* project = app.add_subcommand("project", "project label spans onto translation templates");
  project_engine.add(*project);
  project_scorer.add(*project);
  project->add_option("-i,--input", project_in, "input JSONL (default stdin)");
  project->add_option("-o,--output", project_out, "output JSONL (default stdout)");
  project->add_flag("--timing", timing, "report measured wall time in diagnostics");

  auto* oracle = app.add_subcommand("oracle", "exhaustive top-k for equivalence checks");
  oracle_engine.add(*oracle);
  oracle_scorer.add(*oracle);
  oracle->add_option("-i,--input", oracle_in, "input JSONL (default stdin)");
  oracle->add_option("-o,--output", oracle_out, "output JSONL (default stdout)");

  GenOptions gen_opts;
  std::vector<std::size_t> n_range{gen_opts.spec.n_min, gen_opts.spec.n_max};
  auto* gen = app.add_subcommand("gen", "generate a planted synthetic suite and its gold sidecar");
  gen->add_option("--seed", gen_opts.spec.seed, "suite seed")->capture_default_str();
  gen->add_option("--count", gen_opts.spec.count, "number of examples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--n-range", n_range, "template length range MIN MAX")->expected(2);
  gen->add_option("--noise", gen_opts.spec.noise, "scorer logit noise")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  gen->add_option("--spans", gen_opts.spec.spans, "spans per example")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--out", gen_opts.out, "suite path ('-' for stdout)")->required();
  gen->add_option("--gold-out", gen_opts.gold_out, "gold sidecar path");

  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "compare search settings on a suite with gold placements");
  bench_engine.add(*bench);
  bench_scorer.add(*bench);
  bench->add_option("--suite", bench_opts.suite, "suite JSONL")->required();
  bench->add_option("--gold", bench_opts.gold, "gold sidecar JSONL")->required();
  bench->add_option("--configs", bench_opts.configs,
                    "settings to run (default: exact exact+rerank delta=1 delta=3 delta=1+[ delta=3+[)");
  bench->add_option("--report", bench_opts.report, "write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitFatal;
  }

  try {
    if (project->parsed()) {
      ProjectOptions opts;
      opts.cfg = project_engine.build();
      opts.scorer = project_scorer.spec();
      opts.bridge_url = project_scorer.bridge_url;
      opts.workers = project_scorer.workers;
      opts.timing = timing;
      return with_io(project_in, project_out, [&](std::istream& in, std::ostream& out) {
        return cmd_project(opts, in, out, std::cerr);
      });
    }
    if (oracle->parsed()) {
      ProjectOptions opts;
      opts.cfg = oracle_engine.build();
      opts.scorer = oracle_scorer.spec();
      opts.bridge_url = oracle_scorer.bridge_url;
      opts.workers = oracle_scorer.workers;
      return with_io(oracle_in, oracle_out, [&](std::istream& in, std::ostream& out) {
        return cmd_oracle(opts, in, out, std::cerr);
      });
    }
    if (gen->parsed()) {
      gen_opts.spec.n_min = n_range.at(0);
      gen_opts.spec.n_max = n_range.at(1);
      return cmd_gen(gen_opts, std::cout, std::cerr);
    }
    if (bench->parsed()) {
      bench_opts.base = bench_engine.build();
      bench_opts.scorer = bench_scorer.scorer == "planted" ? bench_scorer.spec() : bench_scorer.scorer;
      bench_opts.bridge_url = bench_scorer.bridge_url;
      bench_opts.workers = bench_scorer.workers;
      return cmd_bench(bench_opts, std::cout, std::cerr);
    }
  } catch (const codec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
