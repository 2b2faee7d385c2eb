#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "elabqud/errors.hpp"
#include "elabqud/util/log.hpp"

namespace elabqud::metrics {

using Tokens = std::vector<std::string>;

enum class Smoothing { none, add_k };

inline std::string_view to_string(Smoothing s) { return s == Smoothing::none ? "none" : "add-k"; }

inline Smoothing parse_smoothing(std::string_view s) {
  if (s == "none") return Smoothing::none;
  if (s == "add-k" || s == "add_k" || s == "add-1") return Smoothing::add_k;
  throw ConfigError("unknown BLEU smoothing '" + std::string(s) + "'");
}

struct BleuOptions {
  Smoothing smoothing = Smoothing::add_k;
  double k = 1.0;
};

// Sufficient statistics for BLEU-4; summed across sentences for corpus BLEU.
struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (std::size_t n = 0; n < 4; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
    return *this;
  }
};

namespace detail {

inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(const Tokens& t, std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++out[std::vector<std::string_view>(t.begin() + static_cast<std::ptrdiff_t>(i),
                                        t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace detail

// Clipped n-gram matches against the per-n-gram maximum over references, and
// the reference length closest to the candidate (ties go to the shorter).
inline BleuStats bleu_stats(const Tokens& candidate, const std::vector<Tokens>& references) {
  if (references.empty()) throw ValidationError("BLEU needs at least one reference");
  BleuStats s;
  s.candidate_length = candidate.size();
  std::size_t best = references.front().size();
  for (const auto& r : references) {
    auto d = [&](std::size_t len) { return len > candidate.size() ? len - candidate.size() : candidate.size() - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  s.reference_length = best;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto cand = detail::ngram_counts(candidate, n);
    std::map<std::vector<std::string_view>, std::size_t> max_ref;
    for (const auto& r : references) {
      for (const auto& [g, c] : detail::ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t matched = 0;
    for (const auto& [g, c] : cand) {
      auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    s.matches[n - 1] = matched;
    s.totals[n - 1] = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  }
  return s;
}

// Geometric mean of modified precisions over the orders the candidate has
// n-grams for (so a one-token exact match scores 1), times the brevity
// penalty. Zero unigram matches always give 0. A higher-order precision with
// zero matches is 0 under Smoothing::none and k / (total + k) under add-k.
inline double bleu_from_stats(const BleuStats& s, const BleuOptions& opt = {}) {
  if (s.candidate_length == 0 || s.matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (s.totals[n] == 0) continue;
    double p;
    if (s.matches[n] > 0) {
      p = static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
    } else if (opt.smoothing == Smoothing::add_k) {
      p = opt.k / (static_cast<double>(s.totals[n]) + opt.k);
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
    ++orders;
  }
  double c = static_cast<double>(s.candidate_length);
  double r = static_cast<double>(s.reference_length);
  double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(bp * std::exp(log_sum / orders), 0.0, 1.0);
}

inline double bleu4(const Tokens& candidate, const std::vector<Tokens>& references, const BleuOptions& opt = {}) {
  if (candidate.empty()) {
    util::warn("BLEU: empty candidate scored as 0");
    return 0.0;
  }
  return bleu_from_stats(bleu_stats(candidate, references), opt);
}

// Corpus-level BLEU-4 over aligned candidate/reference-set pairs.
inline double corpus_bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                           const BleuOptions& opt = {}) {
  if (candidates.size() != references.size()) throw AlignmentError("corpus BLEU: candidates and references differ in length");
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size(); ++i) total += bleu_stats(candidates[i], references[i]);
  return bleu_from_stats(total, opt);
}

}  // namespace elabqud::metrics
