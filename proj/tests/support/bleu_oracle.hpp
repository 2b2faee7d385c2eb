#pragma once

// Deliberately naive BLEU-4 used only as a test oracle: n-grams are compared by
// linear scan over token positions, no maps, no shared code with the library.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace oracle {

using Toks = std::vector<std::string>;

inline bool same_ngram(const Toks& a, std::size_t i, const Toks& b, std::size_t j, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (a[i + k] != b[j + k]) return false;
  }
  return true;
}

inline std::size_t count_in(const Toks& a, std::size_t i, const Toks& hay, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t j = 0; j + n <= hay.size(); ++j) c += same_ngram(a, i, hay, j, n) ? 1 : 0;
  return c;
}

struct Stats {
  double m[4] = {0, 0, 0, 0};
  double t[4] = {0, 0, 0, 0};
  double c = 0;
  double r = 0;
};

inline Stats stats(const Toks& cand, const std::vector<Toks>& refs) {
  Stats s;
  s.c = static_cast<double>(cand.size());
  long best = -1;
  for (const auto& ref : refs) {
    long len = static_cast<long>(ref.size());
    long diff = std::labs(len - static_cast<long>(cand.size()));
    long bdiff = std::labs(best - static_cast<long>(cand.size()));
    if (best < 0 || diff < bdiff || (diff == bdiff && len < best)) best = len;
  }
  s.r = static_cast<double>(best);
  for (std::size_t n = 1; n <= 4; ++n) {
    if (cand.size() < n) continue;
    for (std::size_t i = 0; i + n <= cand.size(); ++i) {
      // Count each distinct n-gram once, at its first occurrence.
      bool first = true;
      for (std::size_t p = 0; p < i; ++p) {
        if (same_ngram(cand, p, cand, i, n)) first = false;
      }
      if (!first) continue;
      std::size_t in_cand = count_in(cand, i, cand, n);
      std::size_t max_ref = 0;
      for (const auto& ref : refs) max_ref = std::max(max_ref, count_in(cand, i, ref, n));
      s.m[n - 1] += static_cast<double>(std::min(in_cand, max_ref));
    }
    s.t[n - 1] = static_cast<double>(cand.size() - n + 1);
  }
  return s;
}

inline double score(const Stats& s, bool add_k, double k) {
  if (s.c == 0 || s.m[0] == 0) return 0.0;
  double prod = 1.0;
  int orders = 0;
  for (int n = 0; n < 4; ++n) {
    if (s.t[n] == 0) continue;
    double p = s.m[n] > 0 ? s.m[n] / s.t[n] : (add_k ? k / (s.t[n] + k) : 0.0);
    prod *= p;
    ++orders;
  }
  if (prod == 0.0) return 0.0;
  double bp = s.c > s.r ? 1.0 : std::exp(1.0 - s.r / s.c);
  return bp * std::pow(prod, 1.0 / orders);
}

inline double bleu4(const Toks& cand, const std::vector<Toks>& refs, bool add_k, double k) {
  return score(stats(cand, refs), add_k, k);
}

inline double corpus_bleu4(const std::vector<Toks>& cands, const std::vector<std::vector<Toks>>& refs, bool add_k,
                           double k) {
  Stats total;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    Stats s = stats(cands[i], refs[i]);
    for (int n = 0; n < 4; ++n) {
      total.m[n] += s.m[n];
      total.t[n] += s.t[n];
    }
    total.c += s.c;
    total.r += s.r;
  }
  return score(total, add_k, k);
}

}  // namespace oracle
