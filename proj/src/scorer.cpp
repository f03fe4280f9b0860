#include "codec/scorer.hpp"

namespace codec {

std::vector<std::vector<double>> Scorer::batch_logprobs(std::span<const ScoreQuery> queries) const {
  std::vector<std::vector<double>> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(next_token_logprobs(q.source, q.prefix, q.candidates));
  return out;
}

void check_candidates(std::span<const TokenId> candidates, std::size_t vocab_size) {
  for (auto c : candidates) {
    if (c < 0 || static_cast<std::size_t>(c) >= vocab_size)
      throw VocabularyError("candidate id " + std::to_string(c) + " outside vocabulary of size " +
                            std::to_string(vocab_size));
  }
}

std::vector<double> sequence_trace(const Scorer& scorer, std::span<const TokenId> source,
                                   std::span<const TokenId> target) {
  std::vector<double> trace;
  if (target.empty()) return trace;
  trace.reserve(target.size());
  trace.push_back(0.0);
  for (std::size_t i = 1; i < target.size(); ++i) {
    auto lp = scorer.next_token_logprobs(source, target.first(i), target.subspan(i, 1));
    trace.push_back(trace.back() + lp.front());
  }
  return trace;
}

double sequence_logprob(const Scorer& scorer, std::span<const TokenId> source,
                        std::span<const TokenId> target) {
  auto trace = sequence_trace(scorer, source, target);
  return trace.empty() ? 0.0 : trace.back();
}

}  // namespace codec
