#include <doctest.h>

#include <cmath>

#include "codec/rerank.hpp"
#include "codec/search.hpp"

using namespace codec;

namespace {

ScoredCandidate candidate(double hyp, TokenSeq span, double span_lp) {
  ScoredCandidate c;
  c.hyp_score = hyp;
  c.span_tokens = std::move(span);
  c.span_score = span_lp;
  return c;
}

}  // namespace

TEST_CASE("span score") {
  Vocabulary v;
  const auto a = v.intern("a");
  const auto b = v.intern("b");
  TableScorer t(v.size());
  // Each word strongly predicts itself as the translation.
  for (auto w : {a, b}) {
    t.set_entry({w}, {kPrefix}, w, std::log(0.9));
    t.set_entry({w}, {kPrefix, w}, kEos, std::log(0.9));
  }
  const TokenSeq sa{a}, sb{b}, none{};
  SUBCASE("matching pairs beat mismatched ones") {
    CHECK(span_score(t, sa, sa) > span_score(t, sb, sa));
    CHECK(span_score(t, sb, sb) > span_score(t, sa, sb));
    CHECK(span_score(t, sa, sa) == doctest::Approx(2 * std::log(0.9)));
  }
  SUBCASE("empty target span") { CHECK(span_score(t, sa, none) == kNegInf); }
  SUBCASE("direction matters") {
    t.set_entry({a}, {kPrefix}, b, std::log(0.05));
    t.set_entry({b}, {kPrefix}, a, std::log(0.02));
    // span_score(e_src, e_tgt) scores e_src given e_tgt.
    CHECK(span_score(t, sb, sa) != span_score(t, sa, sb));
    CHECK(span_score(t, sb, sa) > span_score(t, sa, sb));
  }
}

TEST_CASE("re-ranking") {
  const TokenSeq abc_d{10, 11}, abc{10}, xyz{12}, d{11};
  SUBCASE("single candidate") {
    std::vector<ScoredCandidate> c{candidate(-1.0, abc, -9.0)};
    CHECK(rerank(c) == 0);
  }
  SUBCASE("sub-span with a better span score wins") {
    std::vector<ScoredCandidate> c{candidate(-1.0, abc_d, -2.0), candidate(-2.0, abc, -1.0),
                                   candidate(-3.0, xyz, 0.0)};
    CHECK(rerank(c) == 1);
    CHECK(top_by_hyp_score(c) == 0);
  }
  SUBCASE("input order does not matter, hyp_score does") {
    std::vector<ScoredCandidate> c{candidate(-3.0, xyz, 0.0), candidate(-2.0, abc, -1.0),
                                   candidate(-1.0, abc_d, -2.0)};
    CHECK(rerank(c) == 1);
    CHECK(top_by_hyp_score(c) == 2);
  }
  SUBCASE("identical spans keep the top hypothesis") {
    std::vector<ScoredCandidate> c{candidate(-1.0, abc, -4.0), candidate(-2.0, abc, -4.0),
                                   candidate(-3.0, abc, -4.0)};
    CHECK(rerank(c) == 0);
  }
  SUBCASE("gapped spans only compete under the gapped reading") {
    const TokenSeq a_b_c{10, 11, 12}, a_c{10, 12};
    std::vector<ScoredCandidate> c{candidate(-1.0, a_b_c, -5.0), candidate(-2.0, a_c, -1.0)};
    CHECK(rerank(c, SpanMatch::kContiguous) == 0);
    CHECK(rerank(c, SpanMatch::kGapped) == 1);
  }
  SUBCASE("winner is always an input element") {
    std::vector<ScoredCandidate> c{candidate(-1.0, abc_d, -2.0), candidate(-1.5, d, -0.5),
                                   candidate(-2.0, abc, -0.7)};
    auto w = rerank(c);
    CHECK(w < c.size());
    CHECK(w == 1);
  }
  SUBCASE("empty input") {
    std::vector<ScoredCandidate> c;
    CHECK_THROWS_AS(rerank(c), ValidationError);
  }
}

TEST_CASE("subsequence readings") {
  const TokenSeq hay{1, 2, 3, 4};
  CHECK(is_subsequence(TokenSeq{2, 3}, hay, SpanMatch::kContiguous));
  CHECK_FALSE(is_subsequence(TokenSeq{2, 4}, hay, SpanMatch::kContiguous));
  CHECK(is_subsequence(TokenSeq{2, 4}, hay, SpanMatch::kGapped));
  CHECK_FALSE(is_subsequence(TokenSeq{4, 2}, hay, SpanMatch::kGapped));
  CHECK(is_subsequence(hay, hay, SpanMatch::kContiguous));
}

TEST_CASE("lexical span score") {
  CHECK(lexical_span_score("Faransi", "Faransi") == 1.0);
  CHECK(lexical_span_score("faransi", "faranse") == doctest::Approx(1.0 - 1.0 / 7.0));
  CHECK(lexical_span_score("abc", "xyz") == 0.0);
  CHECK(lexical_span_score("New  York", "new york") == 1.0);
  CHECK(lexical_span_score("faranse", "faransi") == lexical_span_score("faransi", "faranse"));
  CHECK(lexical_span_score("", "") == 1.0);
  CHECK(lexical_span_score("ab", "") == 0.0);
  // Code points, not bytes.
  CHECK(lexical_span_score("Zürich", "Zurich") == doctest::Approx(1.0 - 1.0 / 6.0));
}

TEST_CASE("translate-train filter") {
  FilterConfig cfg;
  auto verdict = [&](double lexical, double span) {
    ScoredCandidate c;
    c.lexical_score = lexical;
    c.span_score = span;
    return filter_example(c, cfg);
  };
  CHECK(verdict(0.6, -10.0) == FilterVerdict::kKeep);
  CHECK(verdict(0.4, -6.0) == FilterVerdict::kDrop);
  CHECK(verdict(0.5, -10.0) == FilterVerdict::kKeep);
  CHECK(verdict(0.4, -5.0) == FilterVerdict::kKeep);
  CHECK(verdict(0.4, -4.0) == FilterVerdict::kKeep);

  ScoredCandidate no_lexical;
  no_lexical.span_score = -20.0;
  CHECK(filter_example(no_lexical, cfg) == FilterVerdict::kKeep);
  cfg.enabled = false;
  CHECK(verdict(0.0, -100.0) == FilterVerdict::kKeep);
}
