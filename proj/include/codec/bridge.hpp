#pragma once

// HTTP client for the Python scorer bridge.
//
//   GET  /health          -> {"model_id", "vocab_size"}
//   POST /logprobs        {"v":"1", source_tokens, prefix_tokens, candidate_tokens}
//                         -> {"logprobs": [...], "model_id"}
//   POST /logprobs_batch  {"v":"1", "requests": [<logprobs body>...]}
//                         -> {"responses": [<logprobs reply>...]}
//
// Tokens travel as surface strings; ids are local to the client vocabulary.

#include <string>

#include "codec/scorer.hpp"
#include "codec/types.hpp"

namespace codec {

inline constexpr const char* kBridgeProtocolVersion = "1";

class BridgeError : public Error {
 public:
  using Error::Error;
};

class BridgeScorer final : public Scorer {
 public:
  // Contacts /health immediately; throws BridgeError when unreachable.
  BridgeScorer(std::string base_url, const Vocabulary& vocab, int timeout_seconds = 60);

  std::vector<double> next_token_logprobs(std::span<const TokenId> source,
                                          std::span<const TokenId> prefix,
                                          std::span<const TokenId> candidates) const override;
  std::vector<std::vector<double>> batch_logprobs(std::span<const ScoreQuery> queries) const override;
  std::size_t vocab_size() const override { return vocab_.size(); }

  const std::string& model_id() const { return model_id_; }
  std::size_t remote_vocab_size() const { return remote_vocab_size_; }

 private:
  std::string post(const std::string& path, const std::string& body) const;

  std::string base_url_;
  const Vocabulary& vocab_;
  int timeout_seconds_;
  std::string model_id_;
  std::size_t remote_vocab_size_ = 0;
};

}  // namespace codec
