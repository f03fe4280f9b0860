#pragma once

// Choosing the final hypothesis among the top-k, and the translate-train
// noise filter.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codec/scorer.hpp"
#include "codec/types.hpp"

namespace codec {

struct ScoredCandidate {
  Hypothesis hypothesis;
  double hyp_score = 0.0;
  TokenSeq span_tokens;  // target tokens strictly between the markers
  double span_score = 0.0;
  std::optional<double> lexical_score;  // translate-train only
};

// How "is a subsequence of the top span" is read when re-ranking.
enum class SpanMatch { kContiguous, kGapped };

struct FilterConfig {
  double lexical_threshold = 0.5;
  double span_logprob_threshold = -5.0;
  bool enabled = true;

  void validate() const;
};

enum class FilterVerdict { kKeep, kDrop };

// log P(e_src | e_tgt): the target span conditions, the source span is
// generated. -inf for an empty target span.
double span_score(const Scorer& scorer, std::span<const TokenId> e_src,
                  std::span<const TokenId> e_tgt, TokenId prefix = kPrefix);

ScoredCandidate make_candidate(const Scorer& scorer, Hypothesis h, std::span<const TokenId> e_src,
                               TokenId prefix = kPrefix);

bool is_subsequence(std::span<const TokenId> needle, std::span<const TokenId> haystack,
                    SpanMatch match);

// Index into `candidates` of the re-ranked winner. Candidates are ordered by
// hyp_score (stable); only the top one and those whose span equals or is a
// subsequence of the top span compete on span_score, ties falling back to
// the hyp_score order.
std::size_t rerank(std::span<const ScoredCandidate> candidates,
                   SpanMatch match = SpanMatch::kContiguous);

// Index of the hyp_score argmax (re-ranking disabled).
std::size_t top_by_hyp_score(std::span<const ScoredCandidate> candidates);

// 1 - levenshtein(fold(a), fold(b)) / max(|fold(a)|, |fold(b)|), over code
// points, where fold lower-cases and collapses whitespace.
double lexical_span_score(std::string_view a, std::string_view b);
std::u32string fold_text(std::string_view text);

FilterVerdict filter_example(const ScoredCandidate& candidate, const FilterConfig& cfg);

}  // namespace codec
