#include "codec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace codec {

std::string_view to_string(ProjectionStatus status) {
  switch (status) {
    case ProjectionStatus::kOk: return "ok";
    case ProjectionStatus::kPartial: return "partial";
    case ProjectionStatus::kDroppedOverlap: return "dropped_overlap";
    case ProjectionStatus::kDroppedFilter: return "dropped_filter";
    case ProjectionStatus::kDroppedUnprojected: return "dropped_unprojected";
  }
  return "unknown";
}

std::string_view to_string(SearchKind kind) {
  switch (kind) {
    case SearchKind::kCodec: return "codec";
    case SearchKind::kExact: return "exact";
    case SearchKind::kCsbs: return "csbs";
    case SearchKind::kOracle: return "oracle";
  }
  return "unknown";
}

std::string_view to_string(Mode mode) { return mode == Mode::kTrain ? "train" : "test"; }

PipelineConfig PipelineConfig::for_mode(Mode mode) {
  PipelineConfig cfg;
  cfg.mode = mode;
  if (mode == Mode::kTrain) {
    cfg.search_cfg.delta = 1;
    cfg.overlap = OverlapPolicy::kDropExample;
    cfg.filter.enabled = true;
  } else {
    cfg.search_cfg.delta = 5;
    cfg.overlap = OverlapPolicy::kGreedyByScore;
    cfg.filter.enabled = false;
  }
  return cfg;
}

void PipelineConfig::validate() const {
  search_cfg.validate();
  prune.validate();
  filter.validate();
  if (beam < 1) throw ValidationError("beam size must be >= 1");
}

std::vector<MarkedSource> decompose(const SourceExample& example) {
  example.validate();
  std::vector<MarkedSource> out;
  out.reserve(example.spans.size());
  for (const auto& span : example.spans) out.push_back(insert_markers(example.tokens, span));
  return out;
}

ProjectionResult recombine(Template tmpl, std::vector<ProjectedSpan> spans, OverlapPolicy policy) {
  ProjectionResult result;
  result.tmpl = std::move(tmpl);
  const bool missing = std::ranges::any_of(spans, [](const auto& s) { return !s.placement; });

  if (policy == OverlapPolicy::kDropExample) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      for (std::size_t j = i + 1; j < spans.size(); ++j) {
        if (spans[i].placement && spans[j].placement &&
            spans[i].placement->overlaps(*spans[j].placement)) {
          result.status = ProjectionStatus::kDroppedOverlap;
          result.spans = std::move(spans);
          return result;
        }
      }
    }
    if (missing) {
      bool filtered = std::ranges::any_of(spans, &ProjectedSpan::filtered);
      result.status =
          filtered ? ProjectionStatus::kDroppedFilter : ProjectionStatus::kDroppedUnprojected;
      result.spans = std::move(spans);
      return result;
    }
    result.spans = std::move(spans);
    return result;
  }

  // Greedy: keep spans in decreasing hyp_score, dropping any that overlap a
  // span already kept.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < spans.size(); ++i)
    if (spans[i].placement) order.push_back(i);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    return *spans[a].hyp_score > *spans[b].hyp_score;
  });
  std::vector<Placement> kept;
  bool dropped = false;
  for (auto i : order) {
    const auto& p = *spans[i].placement;
    if (std::ranges::any_of(kept, [&](const Placement& k) { return k.overlaps(p); })) {
      spans[i].placement.reset();
      spans[i].hyp_score.reset();
      spans[i].span_score.reset();
      dropped = true;
    } else {
      kept.push_back(p);
    }
  }
  result.status = (missing || dropped) ? ProjectionStatus::kPartial : ProjectionStatus::kOk;
  result.spans = std::move(spans);
  return result;
}

ProjectedSpan project_span(const SourceExample& example, std::size_t span_index,
                           const Template& tmpl, const Scorer& scorer, const PipelineConfig& cfg,
                           const FilterContext& filter, Diagnostics& diagnostics) {
  const auto& span = example.spans.at(span_index);
  const auto marked = insert_markers(example.tokens, span);
  ProjectedSpan out;
  out.label = span.label;

  SearchConfig search_cfg = cfg.search_cfg;
  search_cfg.open_gaps = OpenGapSet::unrestricted();
  if (cfg.prune.enabled && tmpl.size() > 0) {
    auto profile = compute_deltas(scorer, tmpl, example.tokens, marked.tokens);
    ++diagnostics.scorer_calls;
    search_cfg.open_gaps = candidate_open_gaps(profile, cfg.prune);
  }
  if (cfg.search == SearchKind::kExact) search_cfg.bound_mode = BoundMode::kExact;
  if (cfg.search == SearchKind::kCodec) search_cfg.bound_mode = BoundMode::kHeuristic;

  const SearchInput input{marked.tokens, tmpl, scorer};
  SearchResult searched;
  switch (cfg.search) {
    case SearchKind::kCodec:
    case SearchKind::kExact:
      searched = constrained_dfs(input, search_cfg);
      break;
    case SearchKind::kCsbs:
      searched = csbs_search(input, cfg.beam, search_cfg.open_gaps, search_cfg.allow_empty_spans,
                             search_cfg.batch_size);
      if (searched.hypotheses.size() > search_cfg.k) searched.hypotheses.resize(search_cfg.k);
      break;
    case SearchKind::kOracle:
      searched = brute_force_topk(input, search_cfg.k, search_cfg.open_gaps,
                                  search_cfg.allow_empty_spans);
      break;
  }
  diagnostics += searched.diagnostics;
  if (searched.hypotheses.empty()) return out;

  const std::span<const TokenId> e_src(example.tokens.data() + span.start, span.end - span.start);
  std::vector<ScoredCandidate> candidates;
  candidates.reserve(searched.hypotheses.size());
  for (const auto& h : searched.hypotheses) candidates.push_back(make_candidate(scorer, h, e_src));
  const std::size_t chosen = cfg.rerank ? rerank(candidates, cfg.span_match)
                                        : top_by_hyp_score(candidates);
  auto& winner = candidates[chosen];

  if (cfg.mode == Mode::kTrain && cfg.filter.enabled && filter.vocab &&
      span_index < filter.span_translations.size()) {
    winner.lexical_score =
        lexical_span_score(filter.span_translations[span_index], filter.vocab->join(winner.span_tokens));
    if (filter_example(winner, cfg.filter) == FilterVerdict::kDrop) {
      out.filtered = true;
      out.topk = std::move(searched.hypotheses);
      return out;
    }
  }

  out.placement = winner.hypothesis.placement;
  out.hyp_score = winner.hyp_score;
  out.span_score = winner.span_score;
  out.topk = std::move(searched.hypotheses);
  return out;
}

ProjectionResult project(const SourceExample& example, const Template& tmpl, const Scorer& scorer,
                         const PipelineConfig& cfg, const FilterContext& filter) {
  cfg.validate();
  example.validate();
  tmpl.validate();
  const auto start = std::chrono::steady_clock::now();
  Diagnostics diagnostics;
  std::vector<ProjectedSpan> spans;
  spans.reserve(example.spans.size());
  for (std::size_t i = 0; i < example.spans.size(); ++i)
    spans.push_back(project_span(example, i, tmpl, scorer, cfg, filter, diagnostics));
  auto result = recombine(tmpl, std::move(spans), cfg.overlap);
  diagnostics.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now() - start);
  result.diagnostics = diagnostics;
  return result;
}

}  // namespace codec
