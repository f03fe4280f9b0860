#include "codec/rerank.hpp"

#include <algorithm>
#include <numeric>

#include "codec/search.hpp"

namespace codec {

void FilterConfig::validate() const {
  if (lexical_threshold < 0.0 || lexical_threshold > 1.0)
    throw ValidationError("lexical threshold must lie in [0, 1]");
}

double span_score(const Scorer& scorer, std::span<const TokenId> e_src,
                  std::span<const TokenId> e_tgt, TokenId prefix) {
  if (e_tgt.empty()) return kNegInf;
  return sequence_logprob(scorer, e_tgt, frame(e_src, prefix));
}

ScoredCandidate make_candidate(const Scorer& scorer, Hypothesis h, std::span<const TokenId> e_src,
                               TokenId prefix) {
  ScoredCandidate c;
  c.hyp_score = h.score;
  c.span_tokens = h.span_tokens();
  c.span_score = span_score(scorer, e_src, c.span_tokens, prefix);
  c.hypothesis = std::move(h);
  return c;
}

bool is_subsequence(std::span<const TokenId> needle, std::span<const TokenId> haystack,
                    SpanMatch match) {
  if (needle.size() > haystack.size()) return false;
  if (match == SpanMatch::kContiguous)
    return !std::ranges::search(haystack, needle).empty() || needle.empty();
  std::size_t i = 0;
  for (auto t : haystack)
    if (i < needle.size() && needle[i] == t) ++i;
  return i == needle.size();
}

namespace {

std::vector<std::size_t> by_hyp_score(std::span<const ScoredCandidate> candidates) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    return candidates[a].hyp_score > candidates[b].hyp_score;
  });
  return order;
}

}  // namespace

std::size_t top_by_hyp_score(std::span<const ScoredCandidate> candidates) {
  if (candidates.empty()) throw ValidationError("no candidates to choose from");
  return by_hyp_score(candidates).front();
}

std::size_t rerank(std::span<const ScoredCandidate> candidates, SpanMatch match) {
  if (candidates.empty()) throw ValidationError("rerank needs at least one candidate");
  auto order = by_hyp_score(candidates);
  const auto& top_span = candidates[order.front()].span_tokens;
  std::size_t best = order.front();
  for (std::size_t r = 1; r < order.size(); ++r) {
    const auto& c = candidates[order[r]];
    if (!is_subsequence(c.span_tokens, top_span, match)) continue;
    if (c.span_score > candidates[best].span_score) best = order[r];
  }
  return best;
}

std::u32string fold_text(std::string_view text) {
  // UTF-8 decode; malformed bytes are taken as Latin-1.
  std::u32string cps;
  for (std::size_t i = 0; i < text.size();) {
    auto b = static_cast<unsigned char>(text[i]);
    char32_t cp = b;
    std::size_t len = 1;
    if (b >= 0xF0) {
      cp = b & 0x07;
      len = 4;
    } else if (b >= 0xE0) {
      cp = b & 0x0F;
      len = 3;
    } else if (b >= 0xC0) {
      cp = b & 0x1F;
      len = 2;
    }
    bool ok = len == 1 || i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!ok) {
      cp = b;
      len = 1;
    }
    cps.push_back(cp);
    i += len;
  }

  auto lower = [](char32_t c) -> char32_t {
    if (c >= U'A' && c <= U'Z') return c + 32;
    if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;  // Latin-1
    if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;  // Greek
    if (c >= 0x410 && c <= 0x42F) return c + 32;                // Cyrillic
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
  };
  auto space = [](char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
           c == 0xA0 || c == 0x3000;
  };

  std::u32string out;
  bool pending_space = false;
  for (char32_t c : cps) {
    if (space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(lower(c));
  }
  return out;
}

double lexical_span_score(std::string_view a, std::string_view b) {
  const auto x = fold_text(a);
  const auto y = fold_text(b);
  const std::size_t longest = std::max(x.size(), y.size());
  if (longest == 0) return 1.0;
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return 1.0 - static_cast<double>(prev[y.size()]) / static_cast<double>(longest);
}

FilterVerdict filter_example(const ScoredCandidate& candidate, const FilterConfig& cfg) {
  if (!cfg.enabled || !candidate.lexical_score) return FilterVerdict::kKeep;
  const bool lexical_low = *candidate.lexical_score < cfg.lexical_threshold;
  const bool span_low = candidate.span_score < cfg.span_logprob_threshold;
  return lexical_low && span_low ? FilterVerdict::kDrop : FilterVerdict::kKeep;
}

}  // namespace codec
