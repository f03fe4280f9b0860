#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "codec/bridge.hpp"
#include "codec/cli.hpp"
#include "codec/records.hpp"

using namespace codec;
using nlohmann::json;

namespace {

const std::string kData = CODEC_TEST_DATA;

// Serves a table fixture over the bridge protocol, like the Python bridge's
// table backend.
class FakeBridge {
 public:
  enum class Fault { kNone, kNullLogprob, kServerError, kGarbage };

  explicit FakeBridge(const std::string& fixture)
      : table_(TableScorer::load_file(fixture, vocab_)) {
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"model_id", "table:fake"}, {"vocab_size", vocab_.size()}}.dump(),
                      "application/json");
    });
    server_.Post("/logprobs", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      handle(req, res, [this](const json& body) { return score(body); });
    });
    server_.Post("/logprobs_batch", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      handle(req, res, [this](const json& body) {
        json responses = json::array();
        for (const auto& r : body.at("requests")) responses.push_back(score(r));
        return json{{"responses", responses}};
      });
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeBridge() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  const Vocabulary& vocab() const { return vocab_; }
  const TableScorer& table() const { return table_; }
  std::size_t requests() const { return requests_; }
  void inject(Fault f) { fault_ = f; }

 private:
  struct HttpError {
    int status;
    std::string message;
  };

  template <typename Fn>
  void handle(const httplib::Request& req, httplib::Response& res, Fn fn) {
    if (fault_ == Fault::kServerError) {
      res.status = 500;
      res.set_content("backend exploded", "text/plain");
      return;
    }
    if (fault_ == Fault::kGarbage) {
      res.set_content("{not json", "application/json");
      return;
    }
    try {
      json body = json::parse(req.body);
      if (body.value("v", "") != "1") throw HttpError{400, "unsupported protocol version"};
      res.set_content(fn(body).dump(), "application/json");
    } catch (const HttpError& e) {
      res.status = e.status;
      res.set_content(json{{"error", e.message}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  TokenSeq ids(const json& surfaces) const {
    TokenSeq out;
    for (const auto& s : surfaces) {
      auto id = vocab_.find(s.get<std::string>());
      if (!id) throw HttpError{422, "unknown token " + s.get<std::string>()};
      out.push_back(*id);
    }
    return out;
  }

  json score(const json& r) const {
    auto lp = table_.next_token_logprobs(ids(r.at("source_tokens")), ids(r.at("prefix_tokens")),
                                         ids(r.at("candidate_tokens")));
    json values = json::array();
    for (double v : lp) values.push_back(fault_ == Fault::kNullLogprob ? json(nullptr) : json(v));
    return {{"logprobs", values}, {"model_id", "table:fake"}};
  }

  Vocabulary vocab_;
  TableScorer table_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
  std::atomic<Fault> fault_{Fault::kNone};
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("bridge scorer matches the table it fronts") {
  FakeBridge fake(kData + "/table_fixture.tsv");
  Vocabulary local;  // ids deliberately differ from the server's
  local.intern("zz_only_here");
  const auto& remote = fake.vocab();
  for (std::size_t i = kReservedCount; i < remote.size(); ++i) local.intern(remote.surface(static_cast<TokenId>(i)));

  BridgeScorer bridge(fake.url(), local);
  CHECK(bridge.model_id() == "table:fake");
  CHECK(bridge.remote_vocab_size() == remote.size());

  auto to_local = [&](const TokenSeq& r) {
    TokenSeq out;
    for (auto t : r) out.push_back(local.id(remote.surface(t)));
    return out;
  };
  const TokenSeq src{remote.id("w1"), remote.id("w2")};
  const TokenSeq prefix{kPrefix, remote.id("w3")};
  const TokenSeq cands{remote.id("w4"), kOpen, kClose, kEos};
  auto expected = fake.table().next_token_logprobs(src, prefix, cands);
  auto got = bridge.next_token_logprobs(to_local(src), to_local(prefix), to_local(cands));
  CHECK(got == expected);

  const TokenSeq lsrc = to_local(src), lprefix = to_local(prefix), lcands = to_local(cands);
  std::vector<ScoreQuery> qs{{lsrc, lprefix, lcands}, {lsrc, std::span(lprefix).first(1), lcands}};
  auto batch = bridge.batch_logprobs(qs);
  REQUIRE(batch.size() == 2);
  CHECK(batch[0] == expected);
  CHECK(batch[1] == fake.table().next_token_logprobs(src, TokenSeq{kPrefix}, cands));

  SUBCASE("tokens the backend does not know") {
    const TokenSeq unknown{local.id("zz_only_here")};
    CHECK_THROWS_WITH_AS(bridge.next_token_logprobs(unknown, lprefix, lcands),
                         doctest::Contains("HTTP 422"), BridgeError);
  }
  SUBCASE("null log-probs are rejected") {
    fake.inject(FakeBridge::Fault::kNullLogprob);
    CHECK_THROWS_WITH_AS(bridge.next_token_logprobs(lsrc, lprefix, lcands),
                         doctest::Contains("non-finite"), BridgeError);
    CHECK_THROWS_AS(bridge.batch_logprobs(qs), BridgeError);
  }
  SUBCASE("server errors carry the body") {
    fake.inject(FakeBridge::Fault::kServerError);
    CHECK_THROWS_WITH_AS(bridge.next_token_logprobs(lsrc, lprefix, lcands),
                         doctest::Contains("backend exploded"), BridgeError);
  }
  SUBCASE("unparseable replies") {
    fake.inject(FakeBridge::Fault::kGarbage);
    CHECK_THROWS_WITH_AS(bridge.batch_logprobs(qs), doctest::Contains("not JSON"), BridgeError);
  }
}

TEST_CASE("engine over the bridge reproduces the local table run") {
  FakeBridge fake(kData + "/table_fixture.tsv");
  const std::string suite = slurp(kData + "/table_suite.jsonl");
  const std::string expected = slurp(kData + "/table_expected.jsonl");
  REQUIRE_FALSE(expected.empty());

  ProjectOptions opts;
  opts.scorer = "bridge:" + fake.url();
  opts.workers = 3;
  std::istringstream in(suite);
  std::ostringstream out, err;
  CHECK(cmd_project(opts, in, out, err) == kExitOk);
  CHECK(out.str() == expected);
  CHECK(fake.requests() > 0);
}

TEST_CASE("bridge url from the environment") {
  FakeBridge fake(kData + "/table_fixture.tsv");
  ::setenv(kBridgeUrlEnv, fake.url().c_str(), 1);
  ProjectOptions opts;
  opts.scorer = "bridge";
  std::istringstream in(slurp(kData + "/table_suite.jsonl"));
  std::ostringstream out, err;
  CHECK(cmd_project(opts, in, out, err) == kExitOk);
  ::unsetenv(kBridgeUrlEnv);
  CHECK(out.str() == slurp(kData + "/table_expected.jsonl"));
}

TEST_CASE("bridge failures") {
  Vocabulary v;
  // Nothing listens on port 1.
  CHECK_THROWS_AS(BridgeScorer("http://127.0.0.1:1", v, 2), BridgeError);

  ProjectOptions opts;
  opts.scorer = "bridge:http://127.0.0.1:1";
  std::istringstream in(slurp(kData + "/table_suite.jsonl"));
  std::ostringstream out, err;
  CHECK(cmd_project(opts, in, out, err) == kExitFatal);
  CHECK(err.str().find("unreachable") != std::string::npos);
}
