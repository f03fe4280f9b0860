#include <doctest.h>

#include <algorithm>
#include <random>

#include "codec/pipeline.hpp"
#include "codec/planted.hpp"
#include "support.hpp"

using namespace codec;

namespace {

ProjectedSpan projected(std::string label, Placement p, double hyp) {
  ProjectedSpan s;
  s.label = std::move(label);
  s.placement = p;
  s.hyp_score = hyp;
  s.span_score = hyp;
  return s;
}

}  // namespace

TEST_CASE("mode defaults") {
  auto train = PipelineConfig::for_mode(Mode::kTrain);
  CHECK(train.search_cfg.delta == 1);
  CHECK(train.overlap == OverlapPolicy::kDropExample);
  CHECK(train.filter.enabled);
  auto test = PipelineConfig::for_mode(Mode::kTest);
  CHECK(test.search_cfg.delta == 5);
  CHECK(test.overlap == OverlapPolicy::kGreedyByScore);
  CHECK_FALSE(test.filter.enabled);
  for (const auto& cfg : {train, test}) {
    CHECK(cfg.search_cfg.k == 5);
    CHECK(cfg.search_cfg.batch_size == 16);
    CHECK(cfg.prune.alpha1 == 0.5);
    CHECK(cfg.prune.alpha2 == 0.1);
    CHECK(cfg.prune.sigma == 5);
    CHECK(cfg.filter.lexical_threshold == 0.5);
    CHECK(cfg.filter.span_logprob_threshold == -5.0);
    CHECK(cfg.rerank);
  }
}

TEST_CASE("decompose") {
  SourceExample none{{4, 5, 6}, {}};
  CHECK(decompose(none).empty());

  SourceExample two{{4, 5, 6, 7}, {{0, 1, "PER"}, {2, 4, "LOC"}}};
  auto marked = decompose(two);
  REQUIRE(marked.size() == 2);
  CHECK(marked[0].tokens == TokenSeq{kOpen, 4, kClose, 5, 6, 7});
  CHECK(marked[1].tokens == TokenSeq{4, 5, kOpen, 6, 7, kClose});
  CHECK(marked[1].span_label == "LOC");
  for (const auto& m : marked) {
    CHECK(std::ranges::count(m.tokens, kOpen) == 1);
    CHECK(std::ranges::count(m.tokens, kClose) == 1);
  }

  SourceExample nested{{4, 5, 6}, {{0, 3, "A"}, {1, 2, "B"}}};
  CHECK_THROWS_AS(decompose(nested), ValidationError);
}

TEST_CASE("recombine") {
  Template tmpl{{4, 5, 6, 7}};
  SUBCASE("disjoint spans in train mode") {
    auto r = recombine(tmpl, {projected("A", {0, 1}, -2), projected("B", {2, 4}, -5)},
                       OverlapPolicy::kDropExample);
    CHECK(r.status == ProjectionStatus::kOk);
    CHECK(r.spans.size() == 2);
  }
  SUBCASE("overlap in train mode drops the example") {
    auto r = recombine(tmpl, {projected("A", {0, 2}, -2), projected("B", {1, 3}, -5)},
                       OverlapPolicy::kDropExample);
    CHECK(r.status == ProjectionStatus::kDroppedOverlap);
    CHECK(r.dropped());
  }
  SUBCASE("overlap in test mode keeps the stronger span") {
    auto r = recombine(tmpl, {projected("A", {1, 3}, -5), projected("B", {0, 2}, -2)},
                       OverlapPolicy::kGreedyByScore);
    CHECK(r.status == ProjectionStatus::kPartial);
    CHECK_FALSE(r.dropped());
    CHECK_FALSE(r.spans[0].placement.has_value());
    REQUIRE(r.spans[1].placement.has_value());
    CHECK(*r.spans[1].placement == Placement{0, 2});
  }
  SUBCASE("an unprojected span") {
    ProjectedSpan missing;
    missing.label = "B";
    auto test = recombine(tmpl, {projected("A", {0, 1}, -2), missing}, OverlapPolicy::kGreedyByScore);
    CHECK(test.status == ProjectionStatus::kPartial);
    auto train = recombine(tmpl, {projected("A", {0, 1}, -2), missing}, OverlapPolicy::kDropExample);
    CHECK(train.status == ProjectionStatus::kDroppedUnprojected);
    missing.filtered = true;
    auto filtered = recombine(tmpl, {projected("A", {0, 1}, -2), missing}, OverlapPolicy::kDropExample);
    CHECK(filtered.status == ProjectionStatus::kDroppedFilter);
  }
}

TEST_CASE("project a planted two-span example at noise 0") {
  PlantedSuiteSpec spec;
  spec.seed = 3;
  spec.count = 40;
  spec.n_min = 6;
  spec.n_max = 18;
  spec.spans = 2;
  for (const auto& inst : build_planted_suite(spec)) {
    const auto& ex = inst.example;
    for (auto mode : {Mode::kTrain, Mode::kTest}) {
      auto cfg = PipelineConfig::for_mode(mode);
      cfg.filter.enabled = false;
      auto r = project(ex.source, ex.tmpl, *inst.scorer, cfg);
      REQUIRE(r.status == ProjectionStatus::kOk);
      REQUIRE(r.spans.size() == 2);
      for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(r.spans[i].placement == ex.gold[i]);
        CHECK(r.spans[i].label == ex.source.spans[i].label);
        // The emitted span is one of its sub-problem's hypotheses.
        CHECK(std::ranges::any_of(r.spans[i].topk, [&](const Hypothesis& h) {
          return h.placement == *r.spans[i].placement;
        }));
      }
    }
  }
}

TEST_CASE("an example without spans needs no scorer") {
  TableScorer t(8);
  testing::CountingScorer counting(t);
  SourceExample ex{{4, 5}, {}};
  auto r = project(ex, Template{{6, 7}}, counting, PipelineConfig::for_mode(Mode::kTest));
  CHECK(r.status == ProjectionStatus::kOk);
  CHECK(r.spans.empty());
  CHECK(r.diagnostics.scorer_calls == 0);
  CHECK(counting.batches() + counting.singles() == 0);
}

TEST_CASE("pruning keeps noise-free results and saves nodes") {
  PlantedSuiteSpec spec;
  spec.seed = 4;
  spec.count = 80;
  spec.n_min = 8;
  spec.n_max = 24;
  std::uint64_t nodes_on = 0, nodes_off = 0;
  for (const auto& inst : build_planted_suite(spec)) {
    const auto& ex = inst.example;
    auto on = PipelineConfig::for_mode(Mode::kTest);
    on.search_cfg.delta = 3;
    auto off = on;
    off.prune.enabled = false;
    auto a = project(ex.source, ex.tmpl, *inst.scorer, on);
    auto b = project(ex.source, ex.tmpl, *inst.scorer, off);
    REQUIRE(a.spans.size() == b.spans.size());
    for (std::size_t i = 0; i < a.spans.size(); ++i) {
      REQUIRE(a.spans[i].placement == b.spans[i].placement);
      REQUIRE(a.spans[i].hyp_score == b.spans[i].hyp_score);
    }
    nodes_on += a.diagnostics.nodes_expanded;
    nodes_off += b.diagnostics.nodes_expanded;
  }
  CHECK(nodes_on < nodes_off);
}

TEST_CASE("train mode filters unlikely spans") {
  PlantedSuiteSpec spec;
  spec.seed = 6;
  spec.count = 10;
  const PlantedWorld world;
  for (const auto& inst : build_planted_suite(spec, world)) {
    const auto& ex = inst.example;
    auto cfg = PipelineConfig::for_mode(Mode::kTrain);
    cfg.filter.span_logprob_threshold = 1.0;  // every span score is below this
    FilterContext good{&world.vocabulary(), {world.vocabulary().join(ex.span_translations[0])}};
    auto kept = project(ex.source, ex.tmpl, *inst.scorer, cfg, good);
    CHECK(kept.status == ProjectionStatus::kOk);

    FilterContext bad{&world.vocabulary(), {"qqqqqqqqqqqqqqqqqqqq"}};
    auto dropped = project(ex.source, ex.tmpl, *inst.scorer, cfg, bad);
    CHECK(dropped.status == ProjectionStatus::kDroppedFilter);
    CHECK(dropped.spans[0].filtered);
  }
}

TEST_CASE("a search that finds nothing marks the span unprojected") {
  // A one-token template with empty spans disallowed has one placement; an
  // open-gap restriction that excludes gap 0 leaves none.
  TableScorer t(8);
  SourceExample ex{{4}, {{0, 1, "X"}}};
  auto cfg = PipelineConfig::for_mode(Mode::kTest);
  cfg.prune.alpha1 = 1e9;  // nothing is strong: falls back to all gaps
  cfg.prune.alpha2 = 1e8;
  auto r = project(ex, Template{{5}}, t, cfg);
  CHECK(r.status == ProjectionStatus::kOk);

  SearchConfig sc;
  sc.open_gaps = OpenGapSet::only({1});
  const TokenSeq src{kOpen, 4, kClose};
  Template tmpl{{5}};
  SearchInput in{src, tmpl, t};
  CHECK(constrained_dfs(in, sc).hypotheses.empty());
}

TEST_CASE("projection is deterministic") {
  PlantedSuiteSpec spec;
  spec.seed = 12;
  spec.count = 20;
  spec.noise = 0.8;
  spec.spans = 2;
  spec.n_min = 6;
  for (const auto& inst : build_planted_suite(spec)) {
    auto cfg = PipelineConfig::for_mode(Mode::kTest);
    auto a = project(inst.example.source, inst.example.tmpl, *inst.scorer, cfg);
    auto b = project(inst.example.source, inst.example.tmpl, *inst.scorer, cfg);
    REQUIRE(a.status == b.status);
    for (std::size_t i = 0; i < a.spans.size(); ++i) {
      CHECK(a.spans[i].placement == b.spans[i].placement);
      CHECK(a.spans[i].hyp_score == b.spans[i].hyp_score);
      CHECK(a.spans[i].span_score == b.spans[i].span_score);
    }
    CHECK(a.diagnostics.nodes_expanded == b.diagnostics.nodes_expanded);
    CHECK(a.diagnostics.scorer_calls == b.diagnostics.scorer_calls);
  }
}
