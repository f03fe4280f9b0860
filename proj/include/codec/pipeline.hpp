#pragma once

// End-to-end projection of an m-span example: one single-span sub-problem
// per source span (prune -> search -> re-rank -> filter), then recombination
// onto the shared template.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codec/pruning.hpp"
#include "codec/rerank.hpp"
#include "codec/scorer.hpp"
#include "codec/search.hpp"
#include "codec/types.hpp"

namespace codec {

enum class Mode { kTrain, kTest };
enum class SearchKind { kCodec, kExact, kCsbs, kOracle };
enum class OverlapPolicy { kDropExample, kGreedyByScore };

enum class ProjectionStatus {
  kOk,
  kPartial,              // test mode: some spans could not be kept
  kDroppedOverlap,       // train mode: projected spans overlap
  kDroppedFilter,        // train mode: a span failed the lexical/span filter
  kDroppedUnprojected,   // train mode: a sub-search found nothing
};

std::string_view to_string(ProjectionStatus status);
std::string_view to_string(SearchKind kind);
std::string_view to_string(Mode mode);

struct PipelineConfig {
  Mode mode = Mode::kTest;
  SearchKind search = SearchKind::kCodec;
  SearchConfig search_cfg;  // open_gaps is filled per sub-problem
  PruneConfig prune;
  FilterConfig filter;
  bool rerank = true;
  SpanMatch span_match = SpanMatch::kContiguous;
  std::size_t beam = 16;
  OverlapPolicy overlap = OverlapPolicy::kGreedyByScore;

  // Defaults for a mode: delta 1 / drop-overlap / filtering in train mode,
  // delta 5 / greedy overlap / no filtering in test mode.
  static PipelineConfig for_mode(Mode mode);
  void validate() const;
};

struct ProjectedSpan {
  std::string label;
  std::optional<Placement> placement;  // empty when unprojected
  std::optional<double> hyp_score;
  std::optional<double> span_score;
  std::vector<Hypothesis> topk;  // search output, best first
  bool filtered = false;
};

struct ProjectionResult {
  Template tmpl;
  // Positional: spans[i] projects source span i. Dropped examples keep their
  // per-span results for inspection; emitters must not publish them.
  std::vector<ProjectedSpan> spans;
  ProjectionStatus status = ProjectionStatus::kOk;
  Diagnostics diagnostics;

  bool dropped() const {
    return status != ProjectionStatus::kOk && status != ProjectionStatus::kPartial;
  }
};

/// Inputs the pipeline needs only for translate-train filtering.
struct FilterContext {
  const Vocabulary* vocab = nullptr;
  // Independent translation of each source span (surfaces joined by spaces).
  std::vector<std::string> span_translations;
};

std::vector<MarkedSource> decompose(const SourceExample& example);

// Applies the overlap policy to per-span projections of one template.
ProjectionResult recombine(Template tmpl, std::vector<ProjectedSpan> spans, OverlapPolicy policy);

// Runs one single-span sub-problem.
ProjectedSpan project_span(const SourceExample& example, std::size_t span_index,
                           const Template& tmpl, const Scorer& scorer, const PipelineConfig& cfg,
                           const FilterContext& filter, Diagnostics& diagnostics);

ProjectionResult project(const SourceExample& example, const Template& tmpl, const Scorer& scorer,
                         const PipelineConfig& cfg, const FilterContext& filter = {});

}  // namespace codec
