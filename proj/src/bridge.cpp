#include "codec/bridge.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

namespace codec {

namespace {

using nlohmann::json;

json query_body(const Vocabulary& vocab, const ScoreQuery& q) {
  return {{"v", kBridgeProtocolVersion},
          {"source_tokens", vocab.decode(q.source)},
          {"prefix_tokens", vocab.decode(q.prefix)},
          {"candidate_tokens", vocab.decode(q.candidates)}};
}

std::vector<double> read_logprobs(const json& reply, std::size_t expected) {
  auto it = reply.find("logprobs");
  if (it == reply.end() || !it->is_array()) throw BridgeError("bridge reply lacks 'logprobs'");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw BridgeError("bridge reply holds a non-finite log-prob");
    out.push_back(v.get<double>());
  }
  if (out.size() != expected) throw BridgeError("bridge reply has the wrong number of log-probs");
  return out;
}

json parse_reply(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw BridgeError(std::string("bridge reply is not JSON: ") + e.what());
  }
}

std::unique_ptr<httplib::Client> make_client(const std::string& url, int timeout) {
  auto client = std::make_unique<httplib::Client>(url);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

}  // namespace

BridgeScorer::BridgeScorer(std::string base_url, const Vocabulary& vocab, int timeout_seconds)
    : base_url_(std::move(base_url)), vocab_(vocab), timeout_seconds_(timeout_seconds) {
  auto client = make_client(base_url_, timeout_seconds_);
  auto res = client->Get("/health");
  if (!res) throw BridgeError("bridge at " + base_url_ + " is unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw BridgeError("bridge /health returned HTTP " + std::to_string(res->status));
  const json health = parse_reply(res->body);
  model_id_ = health.value("model_id", std::string());
  remote_vocab_size_ = health.value("vocab_size", std::size_t{0});
}

std::string BridgeScorer::post(const std::string& path, const std::string& body) const {
  // One client per request keeps the scorer safe to share across threads.
  auto client = make_client(base_url_, timeout_seconds_);
  auto res = client->Post(path, body, "application/json");
  if (!res) throw BridgeError("bridge request " + path + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw BridgeError("bridge " + path + " returned HTTP " + std::to_string(res->status) + ": " +
                      res->body);
  }
  return res->body;
}

std::vector<double> BridgeScorer::next_token_logprobs(std::span<const TokenId> source,
                                                      std::span<const TokenId> prefix,
                                                      std::span<const TokenId> candidates) const {
  check_candidates(candidates, vocab_.size());
  const ScoreQuery q{source, prefix, candidates};
  const json reply = parse_reply(post("/logprobs", query_body(vocab_, q).dump()));
  return read_logprobs(reply, candidates.size());
}

std::vector<std::vector<double>> BridgeScorer::batch_logprobs(std::span<const ScoreQuery> queries) const {
  if (queries.empty()) return {};
  json requests = json::array();
  for (const auto& q : queries) {
    check_candidates(q.candidates, vocab_.size());
    requests.push_back(query_body(vocab_, q));
  }
  const json body = {{"v", kBridgeProtocolVersion}, {"requests", std::move(requests)}};
  const json reply = parse_reply(post("/logprobs_batch", body.dump()));
  auto it = reply.find("responses");
  if (it == reply.end() || !it->is_array() || it->size() != queries.size())
    throw BridgeError("bridge batch reply does not match the request");
  std::vector<std::vector<double>> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    out.push_back(read_logprobs((*it)[i], queries[i].candidates.size()));
  return out;
}

}  // namespace codec
