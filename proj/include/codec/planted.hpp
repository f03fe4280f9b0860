#pragma once

// Synthetic benchmark world with planted ground truth.
//
// A fixed bilingual lexicon maps source words s<i> to target words t<i>;
// target sentences may also contain filler words f<i> with no source
// counterpart. A PlantedAlignmentScorer plays the part of a translation model
// fine-tuned to copy markers: conditioned on a marked source it favours OPEN
// and CLOSE at the gold gaps, with wide shoulders around CLOSE. Skipping a
// marker makes the following template tokens less likely for a few steps.
// Closing early looks cheap locally but every span word left outside the
// markers is penalised afterwards, so narrow searches get led astray.
// Conditioned on the plain source it never wants markers; conditioned on
// anything else it acts as a monotone word-by-word translator, which is what
// span-level re-ranking queries.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "codec/scorer.hpp"
#include "codec/types.hpp"

namespace codec {

struct PlantedParams {
  double template_logit = 5.0;     // next template token
  double other_logit = -3.0;       // any token without a role in the current state
  double eos_early_logit = -2.0;   // EOS while template tokens remain
  double eos_pending_logit = 5.0;  // EOS at the end while a marker is still owed
  double marker_off_logit = -6.0;  // marker the current state cannot take
  double plain_marker_logit = -8.0;
  double open_floor = 0.7;
  double close_floor = 2.3;
  double spike = 7.0;              // OPEN bonus at the gold gap
  double close_spike = 4.2;        // CLOSE bonus at the gold gap
  double open_width_early = 0.55;  // kernel widths (in gaps) of the bonus shoulders
  double open_width_late = 0.45;
  double close_width_early = 2.7;
  double close_width_late = 2.75;
  double mismatch = 1.9;           // CLOSE penalty per gap the OPEN is off gold
  double confusion = 0.4;          // template penalty inside a wrongly opened span
  double open_owed = 0.45;         // template penalty once OPEN is overdue
  double close_owed = 4.3;         // template penalty once CLOSE is overdue
  double owed_decay = 0.5;         // decay length (in gaps) of the owed penalties; 0 keeps them
  double regret = 6.5;             // template penalty on span words left outside an early CLOSE
  double noise = 0.0;              // scale of the hashed N(0, 1) logit noise
  double lexical_logit = 5.0;      // expected word in the word-by-word translator
  double lexical_eos_logit = -1.0;
};

struct PlantedSpan {
  TokenSeq marked_source;
  Placement gold;
};

class PlantedAlignmentScorer final : public Scorer {
 public:
  PlantedAlignmentScorer(std::uint64_t seed, std::size_t vocab_size, std::vector<TokenId> lexicon,
                         TokenSeq plain_source, Template tmpl, std::vector<PlantedSpan> spans,
                         PlantedParams params);

  std::vector<double> next_token_logprobs(std::span<const TokenId> source,
                                          std::span<const TokenId> prefix,
                                          std::span<const TokenId> candidates) const override;
  std::size_t vocab_size() const override { return vocab_size_; }

  const std::vector<PlantedSpan>& spans() const { return spans_; }
  const Template& tmpl() const { return tmpl_; }
  const PlantedParams& params() const { return params_; }

 private:
  struct Logits {
    // (token, logit) for tokens with a role; every other token gets `other`.
    std::vector<std::pair<TokenId, double>> special;
    double other = 0.0;
    bool uniform = false;
  };
  Logits forward_logits(std::span<const TokenId> source, std::span<const TokenId> prefix,
                        const PlantedSpan* marked) const;
  Logits lexical_logits(std::span<const TokenId> source, std::span<const TokenId> prefix) const;
  double noise(std::uint64_t kind, std::span<const TokenId> source,
               std::span<const TokenId> prefix, std::uint64_t role) const;

  std::uint64_t seed_;
  std::size_t vocab_size_;
  std::vector<TokenId> lexicon_;  // lexicon_[id] = translation or -1
  TokenSeq plain_;
  Template tmpl_;
  std::vector<PlantedSpan> spans_;
  PlantedParams params_;
};

struct PlantedExample {
  SourceExample source;
  Template tmpl;
  std::vector<Placement> gold;
  std::vector<TokenSeq> span_translations;
};

/// The fixed lexicon and vocabulary shared by every planted instance.
class PlantedWorld {
 public:
  explicit PlantedWorld(std::size_t lexicon_size = 48, std::size_t filler_count = 6);

  const Vocabulary& vocabulary() const { return vocab_; }
  std::optional<TokenId> translate(TokenId token) const;

  // Template of length n with m labeled spans. Span words are distinct and
  // fillers never sit inside a span, so every span aligns to exactly one
  // contiguous target run.
  PlantedExample generate(std::mt19937_64& rng, std::size_t n, std::size_t m) const;

  // Recovers the gold placements of an example produced by generate().
  std::vector<Placement> align(const SourceExample& example, const Template& tmpl) const;

  // Per-example scorer; noise is keyed by (seed, example content).
  std::shared_ptr<const PlantedAlignmentScorer> make_scorer(std::uint64_t seed, double noise,
                                                            const SourceExample& example,
                                                            const Template& tmpl,
                                                            PlantedParams params = {}) const;

 private:
  Vocabulary vocab_;
  std::vector<TokenId> lexicon_;
  std::vector<TokenId> source_words_;
  std::vector<TokenId> fillers_;
};

// Uniform integer in [0, bound) from a 64-bit Mersenne Twister, identical on
// every platform (unlike std::uniform_int_distribution).
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound);

struct PlantedInstance {
  std::string id;
  PlantedExample example;
  MarkedSource marked;
  Placement gold;
  std::shared_ptr<const PlantedAlignmentScorer> scorer;
};

struct PlantedSuiteSpec {
  std::uint64_t seed = 0;
  std::size_t count = 1;
  std::size_t n_min = 3;
  std::size_t n_max = 12;
  double noise = 0.0;
  std::size_t spans = 1;
  PlantedParams params;  // noise is taken from the field above
};

// One instance per example; with spans > 1 the instance describes span 0.
std::vector<PlantedInstance> build_planted_suite(const PlantedSuiteSpec& spec,
                                                 const PlantedWorld& world = PlantedWorld());

}  // namespace codec
