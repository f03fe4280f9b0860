#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "codec/hash.hpp"
#include "codec/scorer.hpp"

namespace codec {

namespace {

// Log-prob given to unlisted tokens of a row whose listed entries already
// carry all the probability mass.
constexpr double kExhaustedLogprob = -1e4;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

TokenSeq parse_key(const std::string& key, const Vocabulary& vocab) {
  TokenSeq out;
  std::istringstream in(key);
  std::string word;
  while (in >> word) out.push_back(vocab.id(word));
  return out;
}

}  // namespace

TableScorer::TableScorer(std::size_t vocab_size, std::optional<std::uint64_t> seed,
                         double logit_scale)
    : vocab_size_(vocab_size), seed_(seed), logit_scale_(logit_scale) {
  if (vocab_size_ == 0) throw ValidationError("table scorer needs a non-empty vocabulary");
}

void TableScorer::set_entry(TokenSeq source, TokenSeq prefix, TokenId token, double logprob) {
  check_candidates(std::span<const TokenId>(&token, 1), vocab_size_);
  if (!std::isfinite(logprob) || logprob > 0.0)
    throw ValidationError("table log-probs must be finite and <= 0");
  rows_[{std::move(source), std::move(prefix)}][token] = logprob;
}

std::vector<double> TableScorer::row(std::span<const TokenId> source,
                                     std::span<const TokenId> prefix) const {
  const auto v = vocab_size_;
  std::vector<double> out(v);
  auto it = rows_.find(Key{TokenSeq(source.begin(), source.end()), TokenSeq(prefix.begin(), prefix.end())});
  if (it != rows_.end()) {
    const auto& entries = it->second;
    double fill;
    if (default_logprob_) {
      fill = *default_logprob_;
    } else {
      double listed = 0.0;
      for (const auto& [tok, lp] : entries) listed += std::exp(lp);
      double residual = 1.0 - listed;
      std::size_t unlisted = v - entries.size();
      fill = (unlisted > 0 && residual > 0.0) ? std::log(residual / static_cast<double>(unlisted))
                                              : kExhaustedLogprob;
    }
    std::ranges::fill(out, fill);
    for (const auto& [tok, lp] : entries) out[static_cast<std::size_t>(tok)] = lp;
    return out;
  }
  if (!seed_) {
    std::ranges::fill(out, -std::log(static_cast<double>(v)));
    return out;
  }
  auto h = hashing::combine(hashing::combine(hashing::mix(*seed_), source), prefix);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < v; ++t) {
    out[t] = logit_scale_ * hashing::normal(hashing::combine(h, t));
    hi = std::max(hi, out[t]);
  }
  double z = 0.0;
  for (double x : out) z += std::exp(x - hi);
  const double lse = hi + std::log(z);
  for (double& x : out) x -= lse;
  return out;
}

std::vector<double> TableScorer::next_token_logprobs(std::span<const TokenId> source,
                                                     std::span<const TokenId> prefix,
                                                     std::span<const TokenId> candidates) const {
  check_candidates(candidates, vocab_size_);
  auto full = row(source, prefix);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (auto c : candidates) out.push_back(full[static_cast<std::size_t>(c)]);
  return out;
}

TableScorer TableScorer::load(std::istream& in, Vocabulary& vocab) {
  struct Entry {
    std::string source, prefix, token;
    double logprob;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::optional<std::uint64_t> seed;
  std::optional<double> fallback;
  double scale = 2.0;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw ValidationError("table fixture line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    try {
      if (line.front() == '@') {
        if (fields.size() != 2) fail("directive needs exactly one value");
        if (fields[0] == "@vocab") {
          std::istringstream words(fields[1]);
          std::string w;
          while (words >> w) vocab.intern(w);
        } else if (fields[0] == "@seed") {
          seed = std::stoull(fields[1]);
        } else if (fields[0] == "@scale") {
          scale = std::stod(fields[1]);
        } else if (fields[0] == "@default") {
          fallback = std::stod(fields[1]);
        } else {
          fail("unknown directive " + fields[0]);
        }
        continue;
      }
      if (fields.size() != 4) fail("expected 4 tab-separated fields");
      entries.push_back({fields[0], fields[1], fields[2], std::stod(fields[3]), lineno});
    } catch (const std::invalid_argument&) {
      fail("malformed number");
    } catch (const std::out_of_range&) {
      fail("number out of range");
    }
  }
  TableScorer table(vocab.size(), seed, scale);
  if (fallback) table.set_default_logprob(*fallback);
  for (const auto& e : entries) {
    lineno = e.line;
    try {
      table.set_entry(parse_key(e.source, vocab), parse_key(e.prefix, vocab), vocab.id(e.token),
                      e.logprob);
    } catch (const Error& err) {
      fail(err.what());
    }
  }
  return table;
}

TableScorer TableScorer::load_file(const std::string& path, Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open table fixture " + path);
  return load(in, vocab);
}

}  // namespace codec
