#include "codec/pruning.hpp"

#include <algorithm>
#include <cmath>

namespace codec {

void PruneConfig::validate() const {
  if (!(alpha2 < alpha1)) throw ValidationError("alpha2 must be smaller than alpha1");
}

OpenGapSet OpenGapSet::only(std::vector<std::size_t> gaps) {
  OpenGapSet set;
  set.unrestricted_ = false;
  std::ranges::sort(gaps);
  auto dup = std::ranges::unique(gaps);
  gaps.erase(dup.begin(), dup.end());
  set.gaps_ = std::move(gaps);
  return set;
}

bool OpenGapSet::contains(std::size_t gap) const {
  return unrestricted_ || std::ranges::binary_search(gaps_, gap);
}

bool OpenGapSet::any_in(std::size_t lo, std::size_t hi) const {
  if (lo > hi) return false;
  if (unrestricted_) return true;
  auto it = std::ranges::lower_bound(gaps_, lo);
  return it != gaps_.end() && *it <= hi;
}

DeltaProfile compute_deltas(const Scorer& scorer, const Template& tmpl,
                            std::span<const TokenId> source_plain,
                            std::span<const TokenId> source_marked, TokenId prefix) {
  const auto n = tmpl.size();
  TokenSeq framed;
  framed.reserve(n + 1);
  framed.push_back(prefix);
  framed.insert(framed.end(), tmpl.tokens.begin(), tmpl.tokens.end());
  const std::span<const TokenId> all(framed);

  // Teacher-forced along the template: query i scores token i given tokens < i.
  std::vector<ScoreQuery> queries;
  queries.reserve(2 * n);
  for (std::size_t i = 1; i <= n; ++i) {
    queries.push_back({source_marked, all.first(i), all.subspan(i, 1)});
    queries.push_back({source_plain, all.first(i), all.subspan(i, 1)});
  }
  auto scores = scorer.batch_logprobs(queries);
  DeltaProfile profile;
  profile.deltas.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    profile.deltas.push_back(std::abs(scores[2 * i].front() - scores[2 * i + 1].front()));
  return profile;
}

OpenGapSet candidate_open_gaps(const DeltaProfile& profile, const PruneConfig& cfg) {
  if (!cfg.enabled || profile.size() == 0) {
    auto all = OpenGapSet::unrestricted();
    all.fallback_used = cfg.enabled;
    return all;
  }
  const auto& d = profile.deltas;
  const auto n = d.size();
  std::vector<std::size_t> strong;  // 0-based token indices
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > cfg.alpha1) strong.push_back(i);
  if (strong.empty()) {
    auto all = OpenGapSet::unrestricted();
    all.fallback_used = true;
    return all;
  }
  std::vector<std::size_t> gaps = strong;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(d[i] > cfg.alpha2)) continue;
    bool near = std::ranges::any_of(strong, [&](std::size_t j) {
      return (i > j ? i - j : j - i) <= cfg.sigma;
    });
    if (near) gaps.push_back(i);
  }
  // Token i (1-based) maps to gap i - 1, the gap right before it; with 0-based
  // indices that is the index itself.
  return OpenGapSet::only(std::move(gaps));
}

}  // namespace codec
