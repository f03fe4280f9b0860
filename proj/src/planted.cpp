#include "codec/planted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "codec/hash.hpp"

namespace codec {

namespace {

enum Role : std::uint64_t { kRoleTemplate = 1, kRoleOpen, kRoleClose, kRoleEos };
enum Kind : std::uint64_t { kKindMarked = 11, kKindPlain };

struct DecodeState {
  bool valid = true;
  std::size_t t = 0;
  std::optional<std::size_t> open;
  std::optional<std::size_t> close;
};

// Replays a prefix against the template; any deviation makes it invalid.
DecodeState replay(std::span<const TokenId> prefix, const Template& tmpl) {
  DecodeState invalid;
  invalid.valid = false;
  DecodeState s;
  if (prefix.empty() || prefix.front() != kPrefix) return invalid;
  for (auto tok : prefix.subspan(1)) {
    if (tok == kOpen) {
      if (s.open) return invalid;
      s.open = s.t;
    } else if (tok == kClose) {
      if (!s.open || s.close) return invalid;
      s.close = s.t;
    } else if (s.t < tmpl.size() && tok == tmpl.tokens[s.t]) {
      ++s.t;
    } else {
      return invalid;
    }
  }
  return s;
}

double kernel(double distance, double width_before, double width_after) {
  double w = distance < 0 ? width_before : width_after;
  return std::exp(-std::abs(distance) / w);
}

}  // namespace

std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw ValidationError("draw_below needs a positive bound");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

PlantedAlignmentScorer::PlantedAlignmentScorer(std::uint64_t seed, std::size_t vocab_size,
                                               std::vector<TokenId> lexicon, TokenSeq plain_source,
                                               Template tmpl, std::vector<PlantedSpan> spans,
                                               PlantedParams params)
    : seed_(seed),
      vocab_size_(vocab_size),
      lexicon_(std::move(lexicon)),
      plain_(std::move(plain_source)),
      tmpl_(std::move(tmpl)),
      spans_(std::move(spans)),
      params_(params) {
  if (lexicon_.size() != vocab_size_) throw ValidationError("lexicon must cover the vocabulary");
}

double PlantedAlignmentScorer::noise(std::uint64_t kind, std::span<const TokenId> source,
                                     std::span<const TokenId> prefix, std::uint64_t role) const {
  if (params_.noise == 0.0) return 0.0;
  auto h = hashing::combine(hashing::mix(seed_), kind);
  h = hashing::combine(hashing::combine(h, source), prefix);
  return params_.noise * hashing::normal(hashing::combine(h, role));
}

PlantedAlignmentScorer::Logits PlantedAlignmentScorer::forward_logits(
    std::span<const TokenId> source, std::span<const TokenId> prefix,
    const PlantedSpan* marked) const {
  const auto& p = params_;
  Logits out;
  out.other = p.other_logit;
  auto state = replay(prefix, tmpl_);
  if (!state.valid) {
    out.uniform = true;
    return out;
  }
  const auto n = tmpl_.size();
  const auto kind = marked ? kKindMarked : kKindPlain;
  auto eps = [&](Role role) { return noise(kind, source, prefix, role); };
  const bool done = state.open && state.close;

  double tmpl_logit = p.template_logit;
  if (marked) {
    const auto& g = marked->gold;
    auto owed = [&](double penalty, std::size_t gap) {
      if (state.t <= gap) return 0.0;
      if (p.owed_decay <= 0.0) return penalty;
      return penalty * std::exp(-static_cast<double>(state.t - gap - 1) / p.owed_decay);
    };
    if (!state.open) tmpl_logit -= owed(p.open_owed, g.open_gap);
    if (state.open && !state.close) {
      if (*state.open != g.open_gap) tmpl_logit -= p.confusion;
      tmpl_logit -= owed(p.close_owed, g.close_gap);
    }
    // Span words emitted after an early CLOSE.
    if (state.close && *state.close < g.close_gap && state.t < g.close_gap) tmpl_logit -= p.regret;
  }
  if (state.t < n) {
    out.special.emplace_back(tmpl_.tokens[state.t], tmpl_logit + eps(kRoleTemplate));
    out.special.emplace_back(kEos, p.eos_early_logit);
  } else {
    out.special.emplace_back(kEos, (done ? p.template_logit : p.eos_pending_logit) + eps(kRoleEos));
  }

  if (!marked) {
    out.special.emplace_back(kOpen, p.plain_marker_logit);
    out.special.emplace_back(kClose, p.plain_marker_logit);
    return out;
  }

  const auto& gold = marked->gold;
  const auto t = static_cast<double>(state.t);
  if (!state.open) {
    double d = t - static_cast<double>(gold.open_gap);
    double z = p.open_floor + p.spike * kernel(d, p.open_width_early, p.open_width_late);
    out.special.emplace_back(kOpen, z + eps(kRoleOpen));
    out.special.emplace_back(kClose, p.marker_off_logit);
  } else if (!state.close) {
    double d = t - static_cast<double>(gold.close_gap);
    double off = std::abs(static_cast<double>(*state.open) - static_cast<double>(gold.open_gap));
    double z = p.close_floor + p.close_spike * kernel(d, p.close_width_early, p.close_width_late) -
               p.mismatch * off;
    out.special.emplace_back(kOpen, p.marker_off_logit);
    out.special.emplace_back(kClose, z + eps(kRoleClose));
  } else {
    out.special.emplace_back(kOpen, p.marker_off_logit);
    out.special.emplace_back(kClose, p.marker_off_logit);
  }
  return out;
}

PlantedAlignmentScorer::Logits PlantedAlignmentScorer::lexical_logits(
    std::span<const TokenId> source, std::span<const TokenId> prefix) const {
  const auto& p = params_;
  Logits out;
  out.other = p.other_logit;
  if (prefix.empty() || prefix.front() != kPrefix) {
    out.uniform = true;
    return out;
  }
  // Position-wise: step i should produce the translation of source word i.
  // Markers in the source are not translated.
  TokenSeq words;
  for (auto tok : source)
    if (!is_marker(tok)) words.push_back(tok);
  const std::size_t i = prefix.size() - 1;
  if (i < words.size()) {
    TokenId expected = lexicon_[static_cast<std::size_t>(words[i])];
    if (expected >= 0) out.special.emplace_back(expected, p.lexical_logit);
    out.special.emplace_back(kEos, p.lexical_eos_logit);
  } else {
    out.special.emplace_back(kEos, p.lexical_logit);
  }
  return out;
}

std::vector<double> PlantedAlignmentScorer::next_token_logprobs(
    std::span<const TokenId> source, std::span<const TokenId> prefix,
    std::span<const TokenId> candidates) const {
  check_candidates(candidates, vocab_size_);
  check_candidates(source, vocab_size_);
  check_candidates(prefix, vocab_size_);

  const PlantedSpan* marked = nullptr;
  for (const auto& s : spans_)
    if (std::ranges::equal(s.marked_source, source)) marked = &s;
  Logits logits;
  if (marked || std::ranges::equal(plain_, source)) {
    logits = forward_logits(source, prefix, marked);
  } else {
    logits = lexical_logits(source, prefix);
  }

  std::vector<double> out;
  out.reserve(candidates.size());
  if (logits.uniform) {
    out.assign(candidates.size(), -std::log(static_cast<double>(vocab_size_)));
    return out;
  }
  // Log-sum-exp over the role tokens plus the shared mass of the rest.
  double hi = logits.other;
  for (const auto& [tok, z] : logits.special) hi = std::max(hi, z);
  double z_sum = static_cast<double>(vocab_size_ - logits.special.size()) *
                 std::exp(logits.other - hi);
  for (const auto& [tok, z] : logits.special) z_sum += std::exp(z - hi);
  const double lse = hi + std::log(z_sum);
  for (auto c : candidates) {
    double z = logits.other;
    for (const auto& [tok, zt] : logits.special)
      if (tok == c) z = zt;
    out.push_back(z - lse);
  }
  return out;
}

PlantedWorld::PlantedWorld(std::size_t lexicon_size, std::size_t filler_count) {
  std::vector<TokenId> targets;
  for (std::size_t i = 0; i < lexicon_size; ++i)
    source_words_.push_back(vocab_.intern("s" + std::to_string(i)));
  for (std::size_t i = 0; i < lexicon_size; ++i)
    targets.push_back(vocab_.intern("t" + std::to_string(i)));
  for (std::size_t i = 0; i < filler_count; ++i)
    fillers_.push_back(vocab_.intern("f" + std::to_string(i)));
  lexicon_.assign(vocab_.size(), -1);
  for (std::size_t i = 0; i < lexicon_size; ++i) {
    lexicon_[static_cast<std::size_t>(source_words_[i])] = targets[i];
    lexicon_[static_cast<std::size_t>(targets[i])] = source_words_[i];
  }
}

std::optional<TokenId> PlantedWorld::translate(TokenId token) const {
  if (token < 0 || static_cast<std::size_t>(token) >= lexicon_.size()) return std::nullopt;
  auto t = lexicon_[static_cast<std::size_t>(token)];
  if (t < 0) return std::nullopt;
  return t;
}

PlantedExample PlantedWorld::generate(std::mt19937_64& rng, std::size_t n, std::size_t m) const {
  static const char* const kLabels[] = {"PER", "ORG", "LOC"};
  if (m == 0 && n == 0) return {};
  if (n < m) throw ValidationError("template too short for the requested span count");
  const std::size_t max_fillers = std::min<std::size_t>(2, n - m);
  const std::size_t fillers = draw_below(rng, max_fillers + 1);
  const std::size_t ns = n - fillers;
  if (ns > source_words_.size()) throw ValidationError("template longer than the lexicon allows");

  // Distinct source words: partial Fisher-Yates over the lexicon.
  std::vector<TokenId> pool = source_words_;
  PlantedExample ex;
  for (std::size_t i = 0; i < ns; ++i) {
    std::swap(pool[i], pool[i + draw_below(rng, pool.size() - i)]);
    ex.source.tokens.push_back(pool[i]);
  }

  // Span lengths 1..3, then free tokens distributed over the m + 1 slots
  // around the spans.
  std::vector<std::size_t> lengths(m, 1);
  std::size_t used = m;
  for (auto& len : lengths) {
    std::size_t extra = std::min<std::size_t>(draw_below(rng, 3), ns - used);
    len += extra;
    used += extra;
  }
  std::vector<std::size_t> slots(m + 1, 0);
  for (std::size_t f = 0; f < ns - used; ++f) ++slots[draw_below(rng, m + 1)];
  std::size_t pos = slots[0];
  for (std::size_t i = 0; i < m; ++i) {
    ex.source.spans.push_back({pos, pos + lengths[i], kLabels[draw_below(rng, 3)]});
    pos += lengths[i] + slots[i + 1];
  }

  // Fillers go into gaps of the translated sentence that are not inside a span.
  std::vector<std::size_t> allowed;
  for (std::size_t g = 0; g <= ns; ++g) {
    bool inside = std::ranges::any_of(ex.source.spans,
                                      [&](const LabeledSpan& s) { return s.start < g && g < s.end; });
    if (!inside) allowed.push_back(g);
  }
  std::vector<std::pair<std::size_t, TokenId>> inserts;
  for (std::size_t f = 0; f < fillers; ++f) {
    auto gap = allowed[draw_below(rng, allowed.size())];
    inserts.emplace_back(gap, fillers_[draw_below(rng, fillers_.size())]);
  }
  std::ranges::stable_sort(inserts, {}, &std::pair<std::size_t, TokenId>::first);
  std::size_t next = 0;
  for (std::size_t g = 0; g <= ns; ++g) {
    while (next < inserts.size() && inserts[next].first == g) ex.tmpl.tokens.push_back(inserts[next++].second);
    if (g < ns) ex.tmpl.tokens.push_back(*translate(ex.source.tokens[g]));
  }

  ex.gold = align(ex.source, ex.tmpl);
  for (const auto& s : ex.source.spans) {
    TokenSeq tr;
    for (std::size_t i = s.start; i < s.end; ++i) tr.push_back(*translate(ex.source.tokens[i]));
    ex.span_translations.push_back(std::move(tr));
  }
  return ex;
}

std::vector<Placement> PlantedWorld::align(const SourceExample& example, const Template& tmpl) const {
  std::vector<Placement> out;
  for (const auto& s : example.spans) {
    TokenSeq target;
    for (std::size_t i = s.start; i < s.end; ++i) {
      auto t = translate(example.tokens.at(i));
      if (!t) throw ValidationError("span word has no lexicon entry");
      target.push_back(*t);
    }
    auto hit = std::ranges::search(tmpl.tokens, target);
    if (hit.empty()) throw ValidationError("span translation not found in the template");
    auto first = static_cast<std::size_t>(hit.begin() - tmpl.tokens.begin());
    if (!std::ranges::search(hit.end(), tmpl.tokens.end(), target.begin(), target.end()).empty())
      throw ValidationError("span translation occurs more than once in the template");
    out.push_back({first, first + target.size()});
  }
  return out;
}

std::shared_ptr<const PlantedAlignmentScorer> PlantedWorld::make_scorer(
    std::uint64_t seed, double noise, const SourceExample& example, const Template& tmpl,
    PlantedParams params) const {
  auto gold = align(example, tmpl);
  std::vector<PlantedSpan> spans;
  for (std::size_t i = 0; i < example.spans.size(); ++i)
    spans.push_back({insert_markers(example.tokens, example.spans[i]).tokens, gold[i]});
  params.noise = noise;
  auto key = hashing::combine(hashing::combine(hashing::mix(seed), example.tokens), tmpl.tokens);
  return std::make_shared<PlantedAlignmentScorer>(key, vocab_.size(), lexicon_, example.tokens, tmpl,
                                                  std::move(spans), params);
}

std::vector<PlantedInstance> build_planted_suite(const PlantedSuiteSpec& spec,
                                                 const PlantedWorld& world) {
  if (spec.count < 1) throw ValidationError("suite count must be >= 1");
  if (spec.n_min > spec.n_max) throw ValidationError("empty template length range");
  if (spec.spans < 1) throw ValidationError("planted instances need at least one span");
  std::mt19937_64 rng(spec.seed);
  std::vector<PlantedInstance> suite;
  suite.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    std::size_t n = spec.n_min + draw_below(rng, spec.n_max - spec.n_min + 1);
    n = std::max(n, spec.spans);
    PlantedInstance inst;
    inst.id = "planted-" + std::to_string(spec.seed) + "-" + std::to_string(i);
    inst.example = world.generate(rng, n, spec.spans);
    inst.marked = insert_markers(inst.example.source.tokens, inst.example.source.spans.front());
    inst.gold = inst.example.gold.front();
    inst.scorer = world.make_scorer(spec.seed, spec.noise, inst.example.source, inst.example.tmpl,
                                   spec.params);
    suite.push_back(std::move(inst));
  }
  return suite;
}

}  // namespace codec
