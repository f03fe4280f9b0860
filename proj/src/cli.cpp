#include "codec/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "codec/bench.hpp"
#include "codec/bridge.hpp"
#include "codec/parallel.hpp"
#include "codec/records.hpp"
#include "codec/sources.hpp"

namespace codec {

namespace {

struct InputLine {
  std::size_t number = 0;
  std::optional<ExampleRecord> record;
  std::optional<EncodedExample> encoded;
  std::string error;
};

std::vector<InputLine> read_lines(std::istream& in) {
  std::vector<InputLine> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    InputLine line;
    line.number = number;
    try {
      line.record = parse_example_record(text);
    } catch (const ValidationError& e) {
      line.error = e.what();
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string resolve_bridge_url(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kBridgeUrlEnv)) return env;
  return {};
}

int run_records(const ProjectOptions& opts, std::istream& in, std::ostream& out,
                std::ostream& err) {
  std::unique_ptr<ScorerSource> source;
  try {
    opts.cfg.validate();
    if (opts.scorer.empty()) throw ValidationError("no scorer selected (--scorer)");
    source = make_scorer_source(opts.scorer, resolve_bridge_url(opts.bridge_url));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFatal;
  }

  auto lines = read_lines(in);
  for (auto& line : lines) {
    if (!line.record) continue;
    try {
      EncodedExample enc;
      enc.source.tokens = source->encode(line.record->source_tokens);
      enc.source.spans = line.record->spans;
      enc.tmpl.tokens = source->encode(line.record->template_tokens);
      enc.source.validate();
      enc.tmpl.validate();
      line.encoded = std::move(enc);
    } catch (const Error& e) {
      line.error = e.what();
    }
  }

  struct Outcome {
    std::string json;
    std::string error;
    bool fatal = false;
  };
  std::vector<Outcome> outcomes(lines.size());
  const Vocabulary& vocab = source->vocabulary();
  parallel_for(lines.size(), opts.workers, [&](std::size_t i) {
    const auto& line = lines[i];
    auto& o = outcomes[i];
    if (!line.encoded) {
      o.error = line.error;
      return;
    }
    try {
      const auto& ex = *line.encoded;
      FilterContext filter{&vocab, line.record->span_translations};
      auto scorer = source->scorer_for(ex.source, ex.tmpl);
      auto result = project(ex.source, ex.tmpl, *scorer, opts.cfg, filter);
      o.json = result_record(line.record->id, opts.cfg.search, result, opts.timing).dump();
    } catch (const CapacityError& e) {
      o.error = e.what();
      o.fatal = true;
    } catch (const BridgeError& e) {
      o.error = e.what();
      o.fatal = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
  });

  int code = kExitOk;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.error.empty()) {
      out << o.json << '\n';
      continue;
    }
    err << "line " << lines[i].number << ": " << o.error << "\n";
    if (o.fatal) {
      out.flush();
      return kExitFatal;
    }
    code = kExitMalformed;
  }
  out.flush();
  return code;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

int cmd_project(const ProjectOptions& opts, std::istream& in, std::ostream& out, std::ostream& err) {
  return run_records(opts, in, out, err);
}

int cmd_oracle(ProjectOptions opts, std::istream& in, std::ostream& out, std::ostream& err) {
  opts.cfg.search = SearchKind::kOracle;
  opts.cfg.prune.enabled = false;
  opts.cfg.rerank = false;
  opts.cfg.filter.enabled = false;
  return run_records(opts, in, out, err);
}

std::string planted_scorer_spec(std::uint64_t seed, double noise) {
  return "planted:" + std::to_string(seed) + ":" + format_double(noise);
}

void write_planted_suite(const PlantedSuiteSpec& spec, std::ostream& suite, std::ostream& gold) {
  const PlantedWorld world;
  const auto& vocab = world.vocabulary();
  const std::string scorer = planted_scorer_spec(spec.seed, spec.noise);
  for (const auto& inst : build_planted_suite(spec, world)) {
    const auto& ex = inst.example;
    ExampleRecord rec;
    rec.id = inst.id;
    rec.source_tokens = vocab.decode(ex.source.tokens);
    rec.spans = ex.source.spans;
    rec.template_tokens = vocab.decode(ex.tmpl.tokens);
    for (const auto& tr : ex.span_translations) rec.span_translations.push_back(vocab.join(tr));
    suite << to_json(rec).dump() << '\n';
    gold << to_json(GoldRecord{inst.id, scorer, ex.gold}).dump() << '\n';
  }
}

std::string default_gold_path(const std::string& suite_path) {
  std::string stem = suite_path;
  if (stem.ends_with(".jsonl")) stem.resize(stem.size() - 6);
  return stem + ".gold.jsonl";
}

int cmd_gen(const GenOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.spec.count < 1) throw ValidationError("--count must be >= 1");
    const bool to_stdout = opts.out.empty() || opts.out == "-";
    std::string gold_path = opts.gold_out;
    if (gold_path.empty()) {
      if (to_stdout) throw ValidationError("--gold-out is required when the suite goes to stdout");
      gold_path = default_gold_path(opts.out);
    }
    std::ostringstream suite, gold;
    write_planted_suite(opts.spec, suite, gold);
    if (to_stdout) {
      out << suite.str();
    } else {
      std::ofstream f(opts.out, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + opts.out);
      f << suite.str();
    }
    std::ofstream g(gold_path, std::ios::binary);
    if (!g) throw ValidationError("cannot write " + gold_path);
    g << gold.str();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitOk;
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.gold.empty()) throw ValidationError("--gold is required");
    std::ifstream suite_in(opts.suite);
    if (!suite_in) throw ValidationError("cannot read suite " + opts.suite);
    std::ifstream gold_in(opts.gold);
    if (!gold_in) throw ValidationError("cannot read gold file " + opts.gold);

    std::map<std::string, GoldRecord> gold;
    std::string scorer_spec = opts.scorer;
    std::string text;
    while (std::getline(gold_in, text)) {
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto rec = parse_gold_record(text);
      if (scorer_spec.empty()) scorer_spec = rec.scorer;
      gold.emplace(rec.id, std::move(rec));
    }
    if (scorer_spec.empty()) throw ValidationError("no scorer given and none recorded in the gold file");
    auto source = make_scorer_source(scorer_spec, resolve_bridge_url(opts.bridge_url));

    std::vector<BenchCase> cases;
    while (std::getline(suite_in, text)) {
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto rec = parse_example_record(text);
      auto it = gold.find(rec.id);
      if (it == gold.end()) throw ValidationError("no gold placements for '" + rec.id + "'");
      if (it->second.gold.size() != rec.spans.size())
        throw ValidationError("gold for '" + rec.id + "' does not match its spans");
      BenchCase c;
      c.id = rec.id;
      c.example.tokens = source->encode(rec.source_tokens);
      c.example.spans = rec.spans;
      c.tmpl.tokens = source->encode(rec.template_tokens);
      c.gold = it->second.gold;
      cases.push_back(std::move(c));
    }
    for (auto& c : cases) c.scorer = source->scorer_for(c.example, c.tmpl);

    const auto names = opts.configs.empty() ? default_arm_names() : opts.configs;
    std::vector<BenchArm> arms;
    for (const auto& name : names) arms.push_back(parse_arm(name, opts.base));
    const auto report = run_bench(cases, arms, opts.workers);
    out << format_table(report);
    if (!opts.report.empty()) {
      std::ofstream f(opts.report, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + opts.report);
      f << to_json(report).dump(2) << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitOk;
}

}  // namespace codec
