#include "codec/sources.hpp"

#include <charconv>
#include <mutex>

#include "codec/bridge.hpp"
#include "codec/planted.hpp"

namespace codec {

namespace {

class TableSource final : public ScorerSource {
 public:
  explicit TableSource(const std::string& path)
      : scorer_(std::make_shared<TableScorer>(TableScorer::load_file(path, vocab_))) {}

  TokenSeq encode(std::span<const std::string> surfaces) override { return vocab_.encode(surfaces); }
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::shared_ptr<const Scorer> scorer_for(const SourceExample&, const Template&) const override {
    return scorer_;
  }

 private:
  Vocabulary vocab_;
  std::shared_ptr<const TableScorer> scorer_;
};

class PlantedSource final : public ScorerSource {
 public:
  PlantedSource(std::uint64_t seed, double noise) : seed_(seed), noise_(noise) {}

  TokenSeq encode(std::span<const std::string> surfaces) override {
    return world_.vocabulary().encode(surfaces);
  }
  const Vocabulary& vocabulary() const override { return world_.vocabulary(); }
  std::shared_ptr<const Scorer> scorer_for(const SourceExample& example,
                                           const Template& tmpl) const override {
    return world_.make_scorer(seed_, noise_, example, tmpl);
  }

 private:
  PlantedWorld world_;
  std::uint64_t seed_;
  double noise_;
};

class BridgeSource final : public ScorerSource {
 public:
  explicit BridgeSource(std::string url) : url_(std::move(url)) {}

  TokenSeq encode(std::span<const std::string> surfaces) override {
    TokenSeq out;
    out.reserve(surfaces.size());
    for (const auto& s : surfaces) out.push_back(vocab_.intern(s));
    return out;
  }
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::shared_ptr<const Scorer> scorer_for(const SourceExample&, const Template&) const override {
    std::call_once(once_, [this] { scorer_ = std::make_shared<BridgeScorer>(url_, vocab_); });
    return scorer_;
  }

 private:
  std::string url_;
  Vocabulary vocab_;
  mutable std::once_flag once_;
  mutable std::shared_ptr<const BridgeScorer> scorer_;
};

template <typename T>
T parse_number(std::string_view text, const std::string& spec) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("invalid number '" + std::string(text) + "' in scorer spec '" + spec + "'");
  return value;
}

}  // namespace

std::unique_ptr<ScorerSource> make_scorer_source(const std::string& spec,
                                                 const std::string& bridge_url) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  if (kind == "table") {
    if (rest.empty()) throw ValidationError("table scorer needs a path: table:<path>");
    return std::make_unique<TableSource>(rest);
  }
  if (kind == "planted") {
    if (rest.empty()) throw ValidationError("planted scorer needs a seed: planted:<seed>[:<noise>]");
    const auto sep = rest.find(':');
    const auto seed = parse_number<std::uint64_t>(std::string_view(rest).substr(0, sep), spec);
    double noise = 0.0;
    if (sep != std::string::npos) noise = parse_number<double>(std::string_view(rest).substr(sep + 1), spec);
    if (noise < 0.0) throw ValidationError("planted noise must be non-negative");
    return std::make_unique<PlantedSource>(seed, noise);
  }
  if (kind == "bridge") {
    std::string url = rest.empty() ? bridge_url : rest;
    if (url.empty()) throw ValidationError("bridge scorer needs a URL (--bridge-url or CODEC_BRIDGE_URL)");
    return std::make_unique<BridgeSource>(std::move(url));
  }
  throw ValidationError("unknown scorer '" + spec + "' (expected table:, planted: or bridge)");
}

}  // namespace codec
