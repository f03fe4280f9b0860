#pragma once

// Scorer selection for the command-line tool.
//
//   table:<path>              lookup table fixture
//   planted:<seed>[:<noise>]  synthetic scorer built from each record
//   bridge[:<url>]            HTTP scorer bridge

#include <memory>
#include <string>

#include "codec/scorer.hpp"
#include "codec/types.hpp"

namespace codec {

class ScorerSource {
 public:
  virtual ~ScorerSource() = default;

  // Surfaces -> ids. May grow the vocabulary, so it must not run concurrently
  // with scoring.
  virtual TokenSeq encode(std::span<const std::string> surfaces) = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  // Scorer for one example; safe to call concurrently.
  virtual std::shared_ptr<const Scorer> scorer_for(const SourceExample& example,
                                                   const Template& tmpl) const = 0;
};

// Throws ValidationError for an unknown spec. `bridge_url` is used when the
// spec names the bridge without a URL.
std::unique_ptr<ScorerSource> make_scorer_source(const std::string& spec,
                                                 const std::string& bridge_url = {});

}  // namespace codec
