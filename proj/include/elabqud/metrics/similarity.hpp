#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "elabqud/backends/embedding.hpp"
#include "elabqud/corpus/tokenize.hpp"

namespace elabqud::metrics {

struct ScorePair {
  double raw = 0.0;
  double rescaled = 0.0;
};

// Affine baseline rescaling; negative when raw falls below the baseline.
inline double rescale(double raw, double baseline) {
  if (!(baseline < 1.0)) throw ConfigError("rescaling baseline must be < 1");
  return (raw - baseline) / (1.0 - baseline);
}

inline ScorePair make_score(double raw, double baseline) { return {raw, rescale(raw, baseline)}; }

struct GreedyMatch {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double cosine(const backends::Vector& a, const backends::Vector& b) {
  if (a.size() != b.size()) throw ProtocolError("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Each candidate token is matched to its most similar reference token
// (precision) and vice versa (recall).
inline GreedyMatch greedy_match(const std::vector<backends::Vector>& candidate,
                                const std::vector<backends::Vector>& reference) {
  GreedyMatch m;
  if (candidate.empty() || reference.empty()) return m;
  std::vector<double> best_ref(reference.size(), -1.0);
  double p_sum = 0.0;
  for (const auto& c : candidate) {
    double best = -1.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      double s = cosine(c, reference[j]);
      best = std::max(best, s);
      best_ref[j] = std::max(best_ref[j], s);
    }
    p_sum += best;
  }
  double r_sum = 0.0;
  for (double s : best_ref) r_sum += s;
  m.precision = p_sum / static_cast<double>(candidate.size());
  m.recall = r_sum / static_cast<double>(reference.size());
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

// Embedding F1 between two texts under the canonical tokenizer, with the raw
// score clamped to [0, 1] before rescaling.
inline ScorePair embedding_similarity(const std::string& candidate, const std::string& reference,
                                      backends::EmbeddingBackend& embedder, double baseline) {
  auto c = embedder.embed(corpus::tokenize(candidate));
  auto r = embedder.embed(corpus::tokenize(reference));
  double f1 = std::clamp(greedy_match(c, r).f1, 0.0, 1.0);
  return make_score(f1, baseline);
}

inline ScorePair embedding_similarity(const std::string& candidate, const std::string& reference,
                                      backends::EmbeddingBackend& embedder) {
  return embedding_similarity(candidate, reference, embedder, embedder.baseline());
}

// Multi-reference policy: the best F1 over references.
inline ScorePair embedding_similarity_max(const std::string& candidate, const std::vector<std::string>& references,
                                          backends::EmbeddingBackend& embedder, double baseline) {
  if (references.empty()) throw ValidationError("similarity needs at least one reference");
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, embedding_similarity(candidate, r, embedder, baseline).raw);
  return make_score(best, baseline);
}

}  // namespace elabqud::metrics
