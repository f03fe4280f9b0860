#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "codec/planted.hpp"
#include "codec/pruning.hpp"
#include "codec/scorer.hpp"
#include "codec/search.hpp"

using namespace codec;

TEST_CASE("uniform table rows") {
  TableScorer t(4);
  TokenSeq src{};
  TokenSeq prefix{kPrefix};
  TokenSeq cands{kOpen, kClose, kEos};
  auto lp = t.next_token_logprobs(src, prefix, cands);
  for (double v : lp) CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  CHECK(t.next_token_logprobs(src, prefix, cands) == lp);
}

TEST_CASE("two step table sequence log-prob") {
  Vocabulary v;
  const auto a = v.intern("a");
  TableScorer t(v.size());
  const TokenSeq src{a};
  t.set_entry(src, {kPrefix}, a, std::log(0.5));
  t.set_entry(src, {kPrefix, a}, kEos, std::log(0.25));
  CHECK(sequence_logprob(t, src, TokenSeq{kPrefix, a, kEos}) ==
        doctest::Approx(std::log(0.5) + std::log(0.25)).epsilon(1e-12));
  CHECK(sequence_logprob(t, src, TokenSeq{kPrefix, a, kEos}) == doctest::Approx(-2.0794).epsilon(1e-4));

  auto trace = sequence_trace(t, src, TokenSeq{kPrefix, a, kEos});
  REQUIRE(trace.size() == 3);
  CHECK(trace[0] == 0.0);
  CHECK(trace[2] == sequence_logprob(t, src, TokenSeq{kPrefix, a, kEos}));

  SUBCASE("empty body scores EOS alone") {
    t.set_entry(src, {kPrefix}, kEos, std::log(0.125));
    CHECK(sequence_logprob(t, src, TokenSeq{kPrefix, kEos}) == doctest::Approx(std::log(0.125)));
  }
  SUBCASE("unlisted tokens share the remaining mass") {
    auto row = t.row(src, TokenSeq{kPrefix});
    double mass = 0.0;
    for (double x : row) mass += std::exp(x);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row[kOpen] == doctest::Approx(std::log(0.5 / 4)));
  }
}

TEST_CASE("candidates outside the vocabulary are rejected") {
  TableScorer t(5);
  TokenSeq cands{7};
  CHECK_THROWS_AS(t.next_token_logprobs(TokenSeq{}, TokenSeq{kPrefix}, cands), VocabularyError);
}

TEST_CASE("seeded random rows are normalized and pure") {
  TableScorer t(20, 99, 2.0);
  std::mt19937_64 rng(3);
  std::vector<TokenId> all(20);
  std::iota(all.begin(), all.end(), 0);
  for (int probe = 0; probe < 200; ++probe) {
    TokenSeq src, prefix{kPrefix};
    for (std::size_t i = 0, n = draw_below(rng, 6); i < n; ++i)
      src.push_back(static_cast<TokenId>(4 + draw_below(rng, 16)));
    for (std::size_t i = 0, n = draw_below(rng, 6); i < n; ++i)
      prefix.push_back(static_cast<TokenId>(draw_below(rng, 20)));
    auto lp = t.next_token_logprobs(src, prefix, all);
    double mass = 0.0;
    for (double x : lp) mass += std::exp(x);
    REQUIRE(mass == doctest::Approx(1.0).epsilon(1e-6));
    // A candidate's value does not depend on the other candidates asked for.
    TokenSeq one{all[probe % 20]};
    REQUIRE(t.next_token_logprobs(src, prefix, one)[0] == lp[static_cast<std::size_t>(probe % 20)]);
  }
  TokenSeq src{5, 6}, prefix{kPrefix, 7};
  auto first = t.next_token_logprobs(src, prefix, all);
  for (int i = 0; i < 1000; ++i) REQUIRE(t.next_token_logprobs(src, prefix, all) == first);
}

TEST_CASE("table fixture loading") {
  std::istringstream in(
      "# toy\n"
      "@vocab\ta b\n"
      "@default\t-9.5\n"
      "a\t<tgt>\tb\t-0.1\n");
  Vocabulary v;
  auto t = TableScorer::load(in, v);
  CHECK(v.size() == 6);
  const TokenSeq src{v.id("a")};
  const TokenSeq prefix{kPrefix};
  const TokenSeq cands{v.id("b"), v.id("a")};
  auto lp = t.next_token_logprobs(src, prefix, cands);
  CHECK(lp[0] == -0.1);
  CHECK(lp[1] == -9.5);

  std::istringstream bad("a\t<tgt>\tzzz\t-1\n");
  Vocabulary v2;
  CHECK_THROWS(TableScorer::load(bad, v2));
  for (const char* text : {"@vocab\ta\na\t<tgt>\ta\t-inf\n", "@vocab\ta\na\t<tgt>\ta\t0.5\n",
                           "@vocab\ta\na\t<tgt>\ta\n", "@bogus\t1\n"}) {
    std::istringstream in2(text);
    Vocabulary v3;
    CHECK_THROWS_AS(TableScorer::load(in2, v3), ValidationError);
  }
}

TEST_CASE("planted scorer at noise 0") {
  PlantedSuiteSpec spec;
  spec.seed = 5;
  spec.count = 100;
  spec.n_min = 3;
  spec.n_max = 16;
  for (const auto& inst : build_planted_suite(spec)) {
    const auto& tm = inst.example.tmpl;
    const auto g = inst.gold;
    const auto& s = *inst.scorer;

    // OPEN is the favourite right at the gold open gap.
    TokenSeq prefix{kPrefix};
    prefix.insert(prefix.end(), tm.tokens.begin(), tm.tokens.begin() + static_cast<long>(g.open_gap));
    const TokenSeq cands{tm.tokens[g.open_gap], kOpen, kClose, kEos};
    auto lp = s.next_token_logprobs(inst.marked.tokens, prefix, cands);
    REQUIRE(lp[1] == *std::max_element(lp.begin(), lp.end()));

    // The largest delta sits on the first token of the gold span.
    auto prof = compute_deltas(s, tm, inst.example.source.tokens, inst.marked.tokens);
    auto am = static_cast<std::size_t>(std::max_element(prof.deltas.begin(), prof.deltas.end()) -
                                       prof.deltas.begin());
    REQUIRE(am == g.open_gap);

    std::vector<TokenId> all(s.vocab_size());
    std::iota(all.begin(), all.end(), 0);
    double mass = 0.0;
    for (double x : s.next_token_logprobs(inst.marked.tokens, prefix, all)) mass += std::exp(x);
    REQUIRE(mass == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("planted suites recover gold at noise 0 and not always under noise") {
  PlantedSuiteSpec spec;
  spec.seed = 21;
  spec.count = 60;
  spec.n_min = 3;
  spec.n_max = 12;
  auto hits = [&](double noise) {
    spec.noise = noise;
    std::size_t n = 0;
    for (const auto& inst : build_planted_suite(spec)) {
      SearchInput in{inst.marked.tokens, inst.example.tmpl, *inst.scorer};
      auto r = brute_force_topk(in, 1, OpenGapSet::unrestricted(), false);
      n += r.hypotheses.at(0).placement == inst.gold;
    }
    return n;
  };
  CHECK(hits(0.0) == spec.count);
  CHECK(hits(1.5) < spec.count);
}

TEST_CASE("planted suites are reproducible") {
  PlantedSuiteSpec spec;
  spec.seed = 8;
  spec.count = 30;
  spec.noise = 0.7;
  auto a = build_planted_suite(spec);
  auto b = build_planted_suite(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].example.source.tokens == b[i].example.source.tokens);
    CHECK(a[i].example.tmpl.tokens == b[i].example.tmpl.tokens);
    CHECK(a[i].gold == b[i].gold);
    const TokenSeq prefix{kPrefix};
    const TokenSeq cands{kOpen, a[i].example.tmpl.tokens[0]};
    CHECK(a[i].scorer->next_token_logprobs(a[i].marked.tokens, prefix, cands) ==
          b[i].scorer->next_token_logprobs(b[i].marked.tokens, prefix, cands));
  }
}
