#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "codec/types.hpp"

namespace codec {

/// One next-token query: log P(c | prefix, source) for every candidate c.
struct ScoreQuery {
  std::span<const TokenId> source;
  std::span<const TokenId> prefix;  // starts with PREFIX
  std::span<const TokenId> candidates;
};

/// Conditional next-token log-probability oracle standing in for the
/// translation model. Implementations must be deterministic and safe to call
/// concurrently. Returned values are natural logs normalized over the full
/// vocabulary, never renormalized over the candidate list, and the value for a
/// candidate must not depend on which other candidates are requested.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::vector<double> next_token_logprobs(std::span<const TokenId> source,
                                                  std::span<const TokenId> prefix,
                                                  std::span<const TokenId> candidates) const = 0;

  // One model invocation covering several queries. The default loops.
  virtual std::vector<std::vector<double>> batch_logprobs(std::span<const ScoreQuery> queries) const;

  virtual std::size_t vocab_size() const = 0;
};

// Sum of next-token log-probs of target[1..] given target[..i]; target is
// framed as PREFIX . body . EOS and target[0] is not scored.
double sequence_logprob(const Scorer& scorer, std::span<const TokenId> source,
                        std::span<const TokenId> target);

// Cumulative trace L0 = 0, Lj = log P(target[1..j]); size equals target size.
std::vector<double> sequence_trace(const Scorer& scorer, std::span<const TokenId> source,
                                   std::span<const TokenId> target);

// Throws VocabularyError if any candidate is outside [0, vocab_size).
void check_candidates(std::span<const TokenId> candidates, std::size_t vocab_size);

/// Lookup-table scorer.
///
/// Rows are keyed by (source, prefix). A row with explicit entries returns
/// those values; tokens the row does not list share the remaining mass
/// uniformly, or take the configured default log-prob when one is set. Rows
/// without entries are uniform, or, when a seed is configured, a
/// reproducible random softmax row derived from hash(seed, source, prefix).
///
/// Fixture format (UTF-8 text, one record per line, '#' starts a comment):
///
///   @vocab<TAB>w1 w2 w3 ...        declared surfaces besides the reserved four
///   @seed<TAB>17                   optional: random rows for unlisted keys
///   @scale<TAB>2.0                 optional: logit spread of random rows
///   @default<TAB>-9.5              optional: log-prob for unlisted tokens
///   <source-key><TAB><prefix-key><TAB><token><TAB><log-prob>
///
/// Keys are space-joined surfaces; the prefix key includes the PREFIX surface.
class TableScorer final : public Scorer {
 public:
  explicit TableScorer(std::size_t vocab_size, std::optional<std::uint64_t> seed = std::nullopt,
                       double logit_scale = 2.0);

  static TableScorer load(std::istream& in, Vocabulary& vocab);
  static TableScorer load_file(const std::string& path, Vocabulary& vocab);

  void set_entry(TokenSeq source, TokenSeq prefix, TokenId token, double logprob);
  void set_default_logprob(double logprob) { default_logprob_ = logprob; }

  std::vector<double> next_token_logprobs(std::span<const TokenId> source,
                                          std::span<const TokenId> prefix,
                                          std::span<const TokenId> candidates) const override;
  std::size_t vocab_size() const override { return vocab_size_; }

  // Full log-prob row over the vocabulary.
  std::vector<double> row(std::span<const TokenId> source, std::span<const TokenId> prefix) const;

  std::optional<std::uint64_t> seed() const { return seed_; }
  double logit_scale() const { return logit_scale_; }
  std::optional<double> default_logprob() const { return default_logprob_; }

 private:
  using Key = std::pair<TokenSeq, TokenSeq>;
  std::size_t vocab_size_;
  std::optional<std::uint64_t> seed_;
  double logit_scale_;
  std::optional<double> default_logprob_;
  std::map<Key, std::map<TokenId, double>> rows_;
};

}  // namespace codec
