#pragma once

// Opening-marker position pruning. Decoding the template teacher-forced under
// the marked and the plain source and comparing per-token log-probs locates
// the tokens whose probability drops when markers are present; the opening
// marker is only allowed in the gap right before those tokens.

#include <cstddef>
#include <span>
#include <vector>

#include "codec/scorer.hpp"
#include "codec/types.hpp"

namespace codec {

struct DeltaProfile {
  // deltas[i - 1] is the absolute log-prob difference for content token i.
  std::vector<double> deltas;

  std::size_t size() const { return deltas.size(); }
};

struct PruneConfig {
  double alpha1 = 0.5;    // strong threshold
  double alpha2 = 0.1;    // neighbour threshold, must stay below alpha1
  std::size_t sigma = 5;  // neighbour window in tokens
  bool enabled = true;

  void validate() const;
};

/// Gaps where the opening marker may be emitted.
class OpenGapSet {
 public:
  // No restriction at all.
  static OpenGapSet unrestricted() { return OpenGapSet(); }
  static OpenGapSet only(std::vector<std::size_t> gaps);

  bool contains(std::size_t gap) const;
  // Whether some admitted gap lies in [lo, hi].
  bool any_in(std::size_t lo, std::size_t hi) const;
  bool is_unrestricted() const { return unrestricted_; }
  // Sorted gap list; empty when unrestricted.
  const std::vector<std::size_t>& gaps() const { return gaps_; }

  // Set when no token exceeded alpha1 and every gap was admitted.
  bool fallback_used = false;

 private:
  OpenGapSet() = default;
  bool unrestricted_ = true;
  std::vector<std::size_t> gaps_;
};

DeltaProfile compute_deltas(const Scorer& scorer, const Template& tmpl,
                            std::span<const TokenId> source_plain,
                            std::span<const TokenId> source_marked, TokenId prefix = kPrefix);

OpenGapSet candidate_open_gaps(const DeltaProfile& profile, const PruneConfig& cfg);

}  // namespace codec
