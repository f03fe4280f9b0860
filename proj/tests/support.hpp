#pragma once

#include <atomic>
#include <memory>
#include <random>

#include "codec/planted.hpp"
#include "codec/scorer.hpp"
#include "codec/types.hpp"

namespace codec::testing {

// A source sentence with one marked span, a template and a seeded random
// table scorer over a small closed vocabulary.
struct TableInstance {
  SourceExample example;
  MarkedSource marked;
  Template tmpl;
  std::shared_ptr<const TableScorer> scorer;
};

inline TableInstance random_table_instance(std::mt19937_64& rng, std::size_t n_min,
                                           std::size_t n_max, std::size_t words = 12) {
  TableInstance inst;
  const std::size_t vocab_size = kReservedCount + words;
  auto word = [&] { return static_cast<TokenId>(kReservedCount + draw_below(rng, words)); };
  const std::size_t src_len = 1 + draw_below(rng, 8);
  for (std::size_t i = 0; i < src_len; ++i) inst.example.tokens.push_back(word());
  const std::size_t start = draw_below(rng, src_len);
  const std::size_t end = start + 1 + draw_below(rng, src_len - start);
  inst.example.spans.push_back({start, end, "X"});
  inst.marked = insert_markers(inst.example.tokens, inst.example.spans[0]);
  const std::size_t n = n_min + draw_below(rng, n_max - n_min + 1);
  for (std::size_t i = 0; i < n; ++i) inst.tmpl.tokens.push_back(word());
  inst.scorer = std::make_shared<TableScorer>(vocab_size, rng(), 2.0);
  return inst;
}

// Counts model invocations of the wrapped scorer.
class CountingScorer final : public Scorer {
 public:
  explicit CountingScorer(const Scorer& inner) : inner_(inner) {}

  std::vector<double> next_token_logprobs(std::span<const TokenId> source,
                                          std::span<const TokenId> prefix,
                                          std::span<const TokenId> candidates) const override {
    ++single_;
    return inner_.next_token_logprobs(source, prefix, candidates);
  }
  std::vector<std::vector<double>> batch_logprobs(std::span<const ScoreQuery> queries) const override {
    ++batches_;
    std::vector<std::vector<double>> out;
    for (const auto& q : queries)
      out.push_back(inner_.next_token_logprobs(q.source, q.prefix, q.candidates));
    return out;
  }
  std::size_t vocab_size() const override { return inner_.vocab_size(); }

  std::size_t batches() const { return batches_; }
  std::size_t singles() const { return single_; }

 private:
  const Scorer& inner_;
  mutable std::atomic<std::size_t> batches_{0};
  mutable std::atomic<std::size_t> single_{0};
};

}  // namespace codec::testing
