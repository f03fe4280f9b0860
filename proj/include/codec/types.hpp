#pragma once

// Token, span, template, placement and hypothesis representations shared by
// the whole engine, plus the combinatorics of the placement space.
//
// Gaps index the positions between content tokens of a template of length n:
// gap g sits before content token g, gap n sits after the last token. The
// decoded frame is PREFIX . body . EOS, where body is the template with one
// OPEN/CLOSE marker pair inserted.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace codec {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved ids occupy the first four slots of every Vocabulary.
inline constexpr TokenId kOpen = 0;
inline constexpr TokenId kClose = 1;
inline constexpr TokenId kPrefix = 2;
inline constexpr TokenId kEos = 3;
inline constexpr std::size_t kReservedCount = 4;

inline bool is_marker(TokenId t) { return t == kOpen || t == kClose; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BoundsError : public Error {
 public:
  using Error::Error;
};
class MalformedHypothesisError : public Error {
 public:
  using Error::Error;
};
class VocabularyError : public Error {
 public:
  using Error::Error;
};
class CapacityError : public Error {
 public:
  using Error::Error;
};
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bijective surface <-> id map. Ids 0..3 are the reserved OPEN, CLOSE,
/// PREFIX and EOS tokens; their surfaces are configurable.
class Vocabulary {
 public:
  explicit Vocabulary(std::string open = "[", std::string close = "]",
                      std::string prefix = "<tgt>", std::string eos = "</s>");

  TokenId intern(std::string_view surface);
  std::optional<TokenId> find(std::string_view surface) const;
  // Throws VocabularyError for unknown surfaces.
  TokenId id(std::string_view surface) const;
  const std::string& surface(TokenId id) const;
  bool contains(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < surfaces_.size();
  }
  std::size_t size() const { return surfaces_.size(); }

  TokenSeq encode(std::span<const std::string> surfaces) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;
  // Space-joined surfaces; the key format used by table fixtures.
  std::string join(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct LabeledSpan {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::string label;

  friend bool operator==(const LabeledSpan&, const LabeledSpan&) = default;
};

struct SourceExample {
  TokenSeq tokens;
  std::vector<LabeledSpan> spans;

  // Bounds, non-empty spans, no markers in the tokens, pairwise disjoint.
  void validate() const;
};

struct MarkedSource {
  TokenSeq tokens;
  std::string span_label;
};

struct Template {
  TokenSeq tokens;

  std::size_t size() const { return tokens.size(); }
  void validate() const;
};

struct Placement {
  std::size_t open_gap = 0;
  std::size_t close_gap = 0;

  bool empty() const { return open_gap == close_gap; }
  bool overlaps(const Placement& other) const;

  friend auto operator<=>(const Placement&, const Placement&) = default;
};

/// A completed (or partial) decoded sequence with its cumulative trace.
/// tokens[0] is PREFIX; trace[0] = 0 and trace[j] is the log-prob of the
/// first j tokens after PREFIX, so trace.size() == tokens.size().
struct Hypothesis {
  TokenSeq tokens;
  std::vector<double> trace;
  Placement placement;
  double score = 0.0;

  // tokens without the PREFIX/EOS frame.
  std::span<const TokenId> body() const;
  // Tokens strictly between OPEN and CLOSE.
  TokenSeq span_tokens() const;
};

MarkedSource insert_markers(std::span<const TokenId> source, const LabeledSpan& span);

struct Stripped {
  TokenSeq tokens;
  Placement placement;
};

// Requires exactly one OPEN followed by exactly one CLOSE.
Stripped strip_markers(std::span<const TokenId> seq, bool allow_empty_spans = false);

// Number of ways to place m marker pairs into a template of length n. With
// allow_empty this is C(n+2m, 2m); otherwise every span holds >= 1 token.
// Throws CapacityError when the count does not fit in 64 bits.
std::uint64_t count_placements(std::size_t n, std::size_t m, bool allow_empty);

// Body (no frame) of the template with the marker pair inserted.
TokenSeq placement_to_sequence(const Template& tmpl, const Placement& p,
                               bool allow_empty_spans = false);

// PREFIX . body . EOS
TokenSeq frame(std::span<const TokenId> body, TokenId prefix = kPrefix);

// All valid single-pair placements in lexicographic order.
std::vector<Placement> enumerate_placements(std::size_t n, bool allow_empty);

}  // namespace codec
