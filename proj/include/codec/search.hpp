#pragma once

// Constrained top-k search over marker placements.
//
// Every search here walks the same candidate space: at each step the decoder
// may emit the next template token (EOS once the template is exhausted and
// both markers are out) or the next marker (OPEN at an admitted gap, then
// CLOSE). constrained_dfs is the branch-and-bound depth-first search with the
// exact and the length-aware heuristic lower bound; brute_force_topk is the
// exhaustive oracle; csbs_search is the constrained-space beam search baseline.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "codec/pruning.hpp"
#include "codec/scorer.hpp"
#include "codec/types.hpp"

namespace codec {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class BoundMode { kExact, kHeuristic };

struct SearchConfig {
  std::size_t k = 5;
  std::size_t delta = 5;
  BoundMode bound_mode = BoundMode::kHeuristic;
  std::size_t batch_size = 16;
  OpenGapSet open_gaps = OpenGapSet::unrestricted();
  bool allow_empty_spans = false;

  void validate() const;
};

struct Diagnostics {
  std::uint64_t nodes_expanded = 0;
  std::uint64_t scorer_calls = 0;
  std::uint64_t bound_pruned = 0;
  std::uint64_t gap_pruned = 0;
  std::uint64_t completed = 0;
  std::chrono::nanoseconds wall_time{0};

  Diagnostics& operator+=(const Diagnostics& other);
  double wall_ms() const { return std::chrono::duration<double, std::milli>(wall_time).count(); }
};

/// Holds the k best completed hypotheses. At equal scores the hypothesis that
/// arrived first is kept.
class TopKHeap {
 public:
  explicit TopKHeap(std::size_t k);

  // Returns whether the hypothesis was retained.
  bool push(Hypothesis h);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return k_; }
  bool full() const { return items_.size() >= k_; }
  // The current k-th best hypothesis; nullptr while not full.
  const Hypothesis* kth() const { return full() ? &items_.back() : nullptr; }
  double kth_score() const { return full() ? items_.back().score : kNegInf; }
  // Best first.
  const std::vector<Hypothesis>& sorted() const { return items_; }
  std::vector<Hypothesis> take() && { return std::move(items_); }

 private:
  std::size_t k_;
  std::vector<Hypothesis> items_;  // descending score, arrival order among ties
};

struct SearchInput {
  std::span<const TokenId> source_marked;
  const Template& tmpl;
  const Scorer& scorer;
  TokenId prefix = kPrefix;
};

struct SearchResult {
  std::vector<Hypothesis> hypotheses;  // best first
  Diagnostics diagnostics;
};

// Score of the k-th best completed hypothesis, -inf while the heap is short.
double exact_bound(const TopKHeap& heap);

// gamma = L^k_d with d = min(max(j + delta, q), |y^k|), where q is the
// 1-based position of OPEN in y^k after the prefix (0 when absent).
double heuristic_bound(const TopKHeap& heap, std::size_t j, std::size_t delta);
double heuristic_bound_on_trace(std::span<const double> trace, std::size_t q, std::size_t j,
                                std::size_t delta);

/// A partial decode: body holds the tokens after PREFIX, trace[i] is the
/// cumulative log-prob after i body tokens.
struct PartialHypothesis {
  TokenSeq body;
  std::vector<double> trace{0.0};
  std::size_t template_pos = 0;
  std::optional<std::size_t> open_gap;
  std::optional<std::size_t> close_gap;

  bool finished() const { return !body.empty() && body.back() == kEos; }
  double score() const { return trace.back(); }
  PartialHypothesis extend(TokenId token, double logprob) const;
  Hypothesis to_hypothesis(TokenId prefix) const;
};

struct Candidates {
  // At most two: the template-side token first, then the marker.
  std::vector<TokenId> tokens;
  // An OPEN would have been offered here but the gap is not admitted.
  bool gap_blocked = false;
};

Candidates next_candidates(const PartialHypothesis& node, const Template& tmpl,
                           const OpenGapSet& open_gaps, bool allow_empty_spans);

/// Scores the candidates of every partial in one scorer invocation. Result i
/// pairs with frontier[i]: candidate tokens with their log-probs, in
/// candidate order.
struct ScoredChildren {
  std::vector<TokenId> tokens;
  std::vector<double> logprobs;
};
std::vector<ScoredChildren> batched_expand(std::span<const PartialHypothesis* const> frontier,
                                           const SearchInput& input, const OpenGapSet& open_gaps,
                                           bool allow_empty_spans);

SearchResult constrained_dfs(const SearchInput& input, const SearchConfig& cfg);

// Exhaustive oracle. Refuses templates longer than kOracleMaxLength or with
// more than kOracleMaxPlacements placements.
inline constexpr std::size_t kOracleMaxLength = 64;
inline constexpr std::uint64_t kOracleMaxPlacements = 1'000'000;
SearchResult brute_force_topk(const SearchInput& input, std::size_t k, const OpenGapSet& open_gaps,
                              bool allow_empty_spans);

SearchResult csbs_search(const SearchInput& input, std::size_t beam_size,
                         const OpenGapSet& open_gaps = OpenGapSet::unrestricted(),
                         bool allow_empty_spans = false, std::size_t batch_size = 16);

}  // namespace codec
