#include "codec/types.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace codec {

Vocabulary::Vocabulary(std::string open, std::string close, std::string prefix,
                       std::string eos) {
  for (auto* s : {&open, &close, &prefix, &eos}) {
    if (ids_.contains(*s)) throw VocabularyError("reserved surfaces must be distinct: " + *s);
    ids_.emplace(*s, static_cast<TokenId>(surfaces_.size()));
    surfaces_.push_back(std::move(*s));
  }
}

TokenId Vocabulary::intern(std::string_view surface) {
  if (auto found = find(surface)) return *found;
  auto id = static_cast<TokenId>(surfaces_.size());
  surfaces_.emplace_back(surface);
  ids_.emplace(surfaces_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view surface) const {
  if (auto found = find(surface)) return *found;
  throw VocabularyError("unknown token '" + std::string(surface) + "'");
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (!contains(id)) throw VocabularyError("unknown token id " + std::to_string(id));
  return surfaces_[static_cast<std::size_t>(id)];
}

TokenSeq Vocabulary::encode(std::span<const std::string> surfaces) const {
  TokenSeq out;
  out.reserve(surfaces.size());
  for (const auto& s : surfaces) out.push_back(id(s));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto t : ids) out.push_back(surface(t));
  return out;
}

std::string Vocabulary::join(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += surface(ids[i]);
  }
  return out;
}

void SourceExample::validate() const {
  if (std::ranges::any_of(tokens, is_marker))
    throw ValidationError("source tokens contain a marker");
  for (const auto& s : spans) {
    if (s.start >= s.end || s.end > tokens.size()) {
      std::ostringstream msg;
      msg << "span [" << s.start << ", " << s.end << ") invalid for sentence of length "
          << tokens.size();
      throw ValidationError(msg.str());
    }
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      if (std::max(spans[i].start, spans[j].start) < std::min(spans[i].end, spans[j].end))
        throw ValidationError("overlapping or nested spans " + std::to_string(i) + " and " +
                              std::to_string(j));
    }
  }
}

void Template::validate() const {
  if (std::ranges::any_of(tokens, is_marker)) throw ValidationError("template contains a marker");
  if (std::ranges::any_of(tokens, [](TokenId t) { return t == kPrefix || t == kEos; }))
    throw ValidationError("template contains a frame token");
}

bool Placement::overlaps(const Placement& other) const {
  return std::max(open_gap, other.open_gap) < std::min(close_gap, other.close_gap);
}

std::span<const TokenId> Hypothesis::body() const {
  std::span<const TokenId> all(tokens);
  std::size_t first = (!all.empty() && all.front() == kPrefix) ? 1 : 0;
  std::size_t last = (all.size() > first && all.back() == kEos) ? all.size() - 1 : all.size();
  return all.subspan(first, last - first);
}

TokenSeq Hypothesis::span_tokens() const {
  auto open = std::ranges::find(tokens, kOpen);
  auto close = std::ranges::find(tokens, kClose);
  if (open == tokens.end() || close == tokens.end() || close < open) return {};
  return TokenSeq(open + 1, close);
}

MarkedSource insert_markers(std::span<const TokenId> source, const LabeledSpan& span) {
  if (span.start > span.end || span.end > source.size()) {
    throw BoundsError("span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                      ") out of range for length " + std::to_string(source.size()));
  }
  MarkedSource out;
  out.span_label = span.label;
  out.tokens.reserve(source.size() + 2);
  out.tokens.insert(out.tokens.end(), source.begin(), source.begin() + span.start);
  out.tokens.push_back(kOpen);
  out.tokens.insert(out.tokens.end(), source.begin() + span.start, source.begin() + span.end);
  out.tokens.push_back(kClose);
  out.tokens.insert(out.tokens.end(), source.begin() + span.end, source.end());
  return out;
}

Stripped strip_markers(std::span<const TokenId> seq, bool allow_empty_spans) {
  Stripped out;
  out.tokens.reserve(seq.size());
  std::optional<std::size_t> open, close;
  for (auto t : seq) {
    if (t == kOpen) {
      if (open) throw MalformedHypothesisError("duplicated opening marker");
      if (close) throw MalformedHypothesisError("closing marker before opening marker");
      open = out.tokens.size();
    } else if (t == kClose) {
      if (close) throw MalformedHypothesisError("duplicated closing marker");
      if (!open) throw MalformedHypothesisError("closing marker before opening marker");
      close = out.tokens.size();
    } else {
      out.tokens.push_back(t);
    }
  }
  if (!open || !close) throw MalformedHypothesisError("missing marker");
  if (*open == *close && !allow_empty_spans) throw MalformedHypothesisError("empty span");
  out.placement = {*open, *close};
  return out;
}

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 0; i < r; ++i) {
    acc = acc * (n - i) / (i + 1);
    if (acc > std::numeric_limits<std::uint64_t>::max())
      throw CapacityError("placement count overflows 64 bits");
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace

std::uint64_t count_placements(std::size_t n, std::size_t m, bool allow_empty) {
  // Both cases choose 2m gap indices g1 <= g2 <= ... <= g2m from [0, n]. For
  // non-empty spans the open->close steps are strict; shifting each value by
  // the number of weak steps before it makes the sequence strictly increasing
  // over [0, n + m - 1].
  if (allow_empty) return binomial(n + 2 * m, 2 * m);
  if (m == 0) return 1;
  return binomial(n + m, 2 * m);
}

TokenSeq placement_to_sequence(const Template& tmpl, const Placement& p, bool allow_empty_spans) {
  const auto n = tmpl.size();
  if (p.open_gap > p.close_gap || p.close_gap > n || (p.empty() && !allow_empty_spans)) {
    throw BoundsError("placement (" + std::to_string(p.open_gap) + ", " +
                      std::to_string(p.close_gap) + ") invalid for template length " +
                      std::to_string(n));
  }
  TokenSeq out;
  out.reserve(n + 2);
  for (std::size_t g = 0; g <= n; ++g) {
    if (g == p.open_gap) out.push_back(kOpen);
    if (g == p.close_gap) out.push_back(kClose);
    if (g < n) out.push_back(tmpl.tokens[g]);
  }
  return out;
}

TokenSeq frame(std::span<const TokenId> body, TokenId prefix) {
  TokenSeq out;
  out.reserve(body.size() + 2);
  out.push_back(prefix);
  out.insert(out.end(), body.begin(), body.end());
  out.push_back(kEos);
  return out;
}

std::vector<Placement> enumerate_placements(std::size_t n, bool allow_empty) {
  std::vector<Placement> out;
  for (std::size_t o = 0; o <= n; ++o) {
    for (std::size_t c = allow_empty ? o : o + 1; c <= n; ++c) out.push_back({o, c});
  }
  return out;
}

}  // namespace codec
