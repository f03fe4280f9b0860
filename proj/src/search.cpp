#include "codec/search.hpp"

#include <algorithm>
#include <numeric>

namespace codec {

void SearchConfig::validate() const {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
}

Diagnostics& Diagnostics::operator+=(const Diagnostics& other) {
  nodes_expanded += other.nodes_expanded;
  scorer_calls += other.scorer_calls;
  bound_pruned += other.bound_pruned;
  gap_pruned += other.gap_pruned;
  completed += other.completed;
  wall_time += other.wall_time;
  return *this;
}

TopKHeap::TopKHeap(std::size_t k) : k_(k) {
  if (k_ < 1) throw ValidationError("heap capacity must be >= 1");
  items_.reserve(k_ + 1);
}

bool TopKHeap::push(Hypothesis h) {
  if (full() && !(h.score > items_.back().score)) return false;
  // After every element with score >= h.score: ties keep arrival order.
  auto pos = std::ranges::upper_bound(items_, h.score, std::ranges::greater{}, &Hypothesis::score);
  items_.insert(pos, std::move(h));
  if (items_.size() > k_) items_.pop_back();
  return true;
}

double exact_bound(const TopKHeap& heap) { return heap.kth_score(); }

double heuristic_bound_on_trace(std::span<const double> trace, std::size_t q, std::size_t j,
                                std::size_t delta) {
  if (trace.empty()) return kNegInf;
  const std::size_t length = trace.size() - 1;
  // Saturates instead of overflowing for very large delta.
  const std::size_t reach = delta >= length - std::min(j, length) ? length : j + delta;
  const std::size_t d = std::min(std::max(reach, q), length);
  return trace[d];
}

double heuristic_bound(const TopKHeap& heap, std::size_t j, std::size_t delta) {
  const Hypothesis* kth = heap.kth();
  if (!kth) return kNegInf;
  // tokens[0] is the prefix, so an index into tokens is already the 1-based
  // position after the prefix.
  auto it = std::ranges::find(kth->tokens, kOpen);
  std::size_t q = it == kth->tokens.end() ? 0 : static_cast<std::size_t>(it - kth->tokens.begin());
  return heuristic_bound_on_trace(kth->trace, q, j, delta);
}

PartialHypothesis PartialHypothesis::extend(TokenId token, double logprob) const {
  PartialHypothesis child = *this;
  child.body.push_back(token);
  child.trace.push_back(trace.back() + logprob);
  if (token == kOpen) {
    child.open_gap = template_pos;
  } else if (token == kClose) {
    child.close_gap = template_pos;
  } else if (token != kEos) {
    ++child.template_pos;
  }
  return child;
}

Hypothesis PartialHypothesis::to_hypothesis(TokenId prefix) const {
  Hypothesis h;
  h.tokens.reserve(body.size() + 1);
  h.tokens.push_back(prefix);
  h.tokens.insert(h.tokens.end(), body.begin(), body.end());
  h.trace = trace;
  h.placement = {open_gap.value_or(0), close_gap.value_or(0)};
  h.score = trace.back();
  return h;
}

Candidates next_candidates(const PartialHypothesis& node, const Template& tmpl,
                           const OpenGapSet& open_gaps, bool allow_empty_spans) {
  Candidates out;
  if (node.finished()) return out;
  const auto n = tmpl.size();
  const auto t = node.template_pos;
  const bool opened = node.open_gap.has_value();
  const bool closed = node.close_gap.has_value();
  if (t < n) {
    // Reading past the last admissible opening gap leads nowhere.
    const std::size_t last_open = allow_empty_spans ? n : n - 1;
    if (opened || open_gaps.any_in(t + 1, last_open)) out.tokens.push_back(tmpl.tokens[t]);
  } else if (opened && closed) {
    out.tokens.push_back(kEos);
  }
  if (!opened) {
    // Without empty spans an OPEN at the last gap can never be closed.
    if (allow_empty_spans || t < n) {
      if (open_gaps.contains(t)) {
        out.tokens.push_back(kOpen);
      } else {
        out.gap_blocked = true;
      }
    }
  } else if (!closed && (allow_empty_spans || t > *node.open_gap)) {
    out.tokens.push_back(kClose);
  }
  return out;
}

namespace {

struct Expansion {
  ScoredChildren children;
  bool gap_blocked = false;
};

std::vector<Expansion> expand_frontier(std::span<const PartialHypothesis* const> frontier,
                                       const SearchInput& input, const OpenGapSet& open_gaps,
                                       bool allow_empty_spans) {
  std::vector<Expansion> out(frontier.size());
  std::vector<TokenSeq> prefixes;
  std::vector<std::size_t> owner;
  prefixes.reserve(frontier.size());
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    auto cands = next_candidates(*frontier[i], input.tmpl, open_gaps, allow_empty_spans);
    out[i].gap_blocked = cands.gap_blocked;
    out[i].children.tokens = std::move(cands.tokens);
    if (out[i].children.tokens.empty()) continue;
    TokenSeq prefix;
    prefix.reserve(frontier[i]->body.size() + 1);
    prefix.push_back(input.prefix);
    prefix.insert(prefix.end(), frontier[i]->body.begin(), frontier[i]->body.end());
    prefixes.push_back(std::move(prefix));
    owner.push_back(i);
  }
  if (owner.empty()) return out;
  std::vector<ScoreQuery> queries;
  queries.reserve(owner.size());
  for (std::size_t q = 0; q < owner.size(); ++q)
    queries.push_back({input.source_marked, prefixes[q], out[owner[q]].children.tokens});
  auto scores = input.scorer.batch_logprobs(queries);
  for (std::size_t q = 0; q < owner.size(); ++q) out[owner[q]].children.logprobs = std::move(scores[q]);
  return out;
}

// Children in expansion order: decreasing log-prob, template token first on ties.
std::vector<std::size_t> expansion_order(const ScoredChildren& scored) {
  std::vector<std::size_t> order(scored.tokens.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    return scored.logprobs[a] > scored.logprobs[b];
  });
  return order;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::chrono::nanoseconds elapsed() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                start_);
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::vector<ScoredChildren> batched_expand(std::span<const PartialHypothesis* const> frontier,
                                           const SearchInput& input, const OpenGapSet& open_gaps,
                                           bool allow_empty_spans) {
  auto expanded = expand_frontier(frontier, input, open_gaps, allow_empty_spans);
  std::vector<ScoredChildren> out;
  out.reserve(expanded.size());
  for (auto& e : expanded) out.push_back(std::move(e.children));
  return out;
}

SearchResult constrained_dfs(const SearchInput& input, const SearchConfig& cfg) {
  cfg.validate();
  Stopwatch clock;
  SearchResult result;
  auto& diag = result.diagnostics;
  TopKHeap heap(cfg.k);

  auto bound = [&](std::size_t length) {
    return cfg.bound_mode == BoundMode::kExact ? exact_bound(heap)
                                               : heuristic_bound(heap, length, cfg.delta);
  };

  // Explicit stack in place of recursion. A frame's bound check runs when it
  // reaches the top, i.e. after all earlier siblings' subtrees are done,
  // which is exactly when the recursive formulation would evaluate it.
  struct Frame {
    PartialHypothesis node;
    bool admitted = false;
    std::optional<Expansion> expansion;
  };
  std::vector<Frame> stack;
  stack.push_back({PartialHypothesis{}, true, std::nullopt});

  while (!stack.empty()) {
    Frame& top = stack.back();
    if (!top.admitted) {
      if (!(top.node.score() > bound(top.node.body.size()))) {
        ++diag.bound_pruned;
        stack.pop_back();
        continue;
      }
      top.admitted = true;
    }
    if (top.node.finished()) {
      ++diag.completed;
      heap.push(top.node.to_hypothesis(input.prefix));
      stack.pop_back();
      continue;
    }

    if (!top.expansion) {
      // Score this node together with up to batch_size - 1 pending frames
      // below it. Scores are pure, so scoring a frame early never changes the
      // search trajectory; it only saves scorer invocations.
      std::vector<std::size_t> batch{stack.size() - 1};
      for (std::size_t i = stack.size() - 1; i-- > 0 && batch.size() < cfg.batch_size;) {
        const Frame& f = stack[i];
        if (f.expansion || f.node.finished()) continue;
        if (!f.admitted && !(f.node.score() > bound(f.node.body.size()))) continue;
        batch.push_back(i);
      }
      std::vector<const PartialHypothesis*> frontier;
      frontier.reserve(batch.size());
      for (auto i : batch) frontier.push_back(&stack[i].node);
      auto expanded = expand_frontier(frontier, input, cfg.open_gaps, cfg.allow_empty_spans);
      ++diag.scorer_calls;
      for (std::size_t b = 0; b < batch.size(); ++b) stack[batch[b]].expansion = std::move(expanded[b]);
    }

    ++diag.nodes_expanded;
    PartialHypothesis node = std::move(stack.back().node);
    Expansion expansion = std::move(*stack.back().expansion);
    stack.pop_back();
    if (expansion.gap_blocked) ++diag.gap_pruned;

    auto order = expansion_order(expansion.children);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      stack.push_back({node.extend(expansion.children.tokens[*it], expansion.children.logprobs[*it]),
                       false, std::nullopt});
    }
  }

  result.hypotheses = std::move(heap).take();
  diag.wall_time = clock.elapsed();
  return result;
}

SearchResult brute_force_topk(const SearchInput& input, std::size_t k, const OpenGapSet& open_gaps,
                              bool allow_empty_spans) {
  if (k < 1) throw ValidationError("k must be >= 1");
  const auto n = input.tmpl.size();
  if (n > kOracleMaxLength) {
    throw CapacityError("oracle refuses templates longer than " +
                        std::to_string(kOracleMaxLength) + " tokens (got " + std::to_string(n) +
                        ")");
  }
  if (count_placements(n, 1, allow_empty_spans) > kOracleMaxPlacements)
    throw CapacityError("oracle placement count exceeds " + std::to_string(kOracleMaxPlacements));

  Stopwatch clock;
  SearchResult result;
  for (const auto& p : enumerate_placements(n, allow_empty_spans)) {
    if (!open_gaps.contains(p.open_gap)) continue;
    Hypothesis h;
    h.tokens = frame(placement_to_sequence(input.tmpl, p, allow_empty_spans), input.prefix);
    h.trace = sequence_trace(input.scorer, input.source_marked, h.tokens);
    h.placement = p;
    h.score = h.trace.back();
    result.diagnostics.scorer_calls += h.tokens.size() - 1;
    ++result.diagnostics.nodes_expanded;
    ++result.diagnostics.completed;
    result.hypotheses.push_back(std::move(h));
  }
  // Enumeration is lexicographic, so a stable sort breaks ties by placement.
  std::ranges::stable_sort(result.hypotheses, std::ranges::greater{}, &Hypothesis::score);
  if (result.hypotheses.size() > k) result.hypotheses.resize(k);
  result.diagnostics.wall_time = clock.elapsed();
  return result;
}

SearchResult csbs_search(const SearchInput& input, std::size_t beam_size,
                         const OpenGapSet& open_gaps, bool allow_empty_spans,
                         std::size_t batch_size) {
  if (beam_size < 1) throw ValidationError("beam size must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  Stopwatch clock;
  SearchResult result;
  auto& diag = result.diagnostics;
  std::vector<PartialHypothesis> beam{PartialHypothesis{}};
  std::vector<PartialHypothesis> finished;

  while (!beam.empty()) {
    std::vector<Expansion> expanded;
    expanded.reserve(beam.size());
    for (std::size_t lo = 0; lo < beam.size(); lo += batch_size) {
      std::vector<const PartialHypothesis*> frontier;
      for (std::size_t i = lo; i < std::min(beam.size(), lo + batch_size); ++i)
        frontier.push_back(&beam[i]);
      auto part = expand_frontier(frontier, input, open_gaps, allow_empty_spans);
      ++diag.scorer_calls;
      for (auto& e : part) expanded.push_back(std::move(e));
    }
    diag.nodes_expanded += beam.size();

    std::vector<PartialHypothesis> children;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      if (expanded[i].gap_blocked) ++diag.gap_pruned;
      const auto& scored = expanded[i].children;
      for (auto c : expansion_order(scored))
        children.push_back(beam[i].extend(scored.tokens[c], scored.logprobs[c]));
    }
    std::ranges::stable_sort(children, std::ranges::greater{}, &PartialHypothesis::score);
    if (children.size() > beam_size) {
      diag.bound_pruned += children.size() - beam_size;
      children.resize(beam_size);
    }
    beam.clear();
    for (auto& c : children) {
      if (c.finished()) {
        ++diag.completed;
        finished.push_back(std::move(c));
      } else {
        beam.push_back(std::move(c));
      }
    }
  }

  std::ranges::stable_sort(finished, std::ranges::greater{}, &PartialHypothesis::score);
  result.hypotheses.reserve(finished.size());
  for (const auto& f : finished) result.hypotheses.push_back(f.to_hypothesis(input.prefix));
  diag.wall_time = clock.elapsed();
  return result;
}

}  // namespace codec
