#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "elabqud/backends/classifier.hpp"
#include "elabqud/corpus/dataset.hpp"
#include "elabqud/metrics/similarity.hpp"
#include "elabqud/util/log.hpp"
#include "elabqud/util/random.hpp"

namespace elabqud::analysis {

using nlohmann::json;
using SimilarityMetric = std::function<metrics::ScorePair(const std::string&, const std::string&)>;

inline SimilarityMetric embedding_metric(backends::EmbeddingBackend& embedder) {
  return [&embedder](const std::string& a, const std::string& b) {
    return metrics::embedding_similarity(a, b, embedder);
  };
}

using QuestionPair = std::pair<const corpus::QUDAnnotation*, const corpus::QUDAnnotation*>;

// Only annotations carrying a question take part (organizational ones may not).
inline bool has_question(const corpus::QUDAnnotation& a) { return !corpus::is_blank(a.question); }

// Every unordered pair of questions on the same instance, in insertion order.
inline std::vector<QuestionPair> same_instance_pairs(const corpus::Dataset& data) {
  std::vector<QuestionPair> out;
  for (const auto& [id, group] : data.annotations_by_instance()) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (!has_question(*group[i])) continue;
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        if (has_question(*group[j])) out.emplace_back(group[i], group[j]);
      }
    }
  }
  return out;
}

// Pairs of questions from the same document but different instances.
inline std::vector<QuestionPair> cross_instance_pairs(const corpus::Dataset& data) {
  std::map<std::string, std::vector<const corpus::QUDAnnotation*>> by_doc;
  for (const auto& a : data.annotations()) {
    if (has_question(a)) by_doc[data.instance(a.instance_id).doc_id].push_back(&a);
  }
  std::vector<QuestionPair> out;
  for (const auto& [doc, qs] : by_doc) {
    for (std::size_t i = 0; i < qs.size(); ++i) {
      for (std::size_t j = i + 1; j < qs.size(); ++j) {
        if (qs[i]->instance_id != qs[j]->instance_id) out.emplace_back(qs[i], qs[j]);
      }
    }
  }
  return out;
}

struct QuestionSimilarityReport {
  metrics::ScorePair same_elab_mean;
  std::optional<metrics::ScorePair> random_pair_mean;  // absent when no document has two instances
  std::size_t n_same_pairs = 0;
  std::size_t n_random_pairs = 0;
  std::uint64_t seed = 0;

  json to_json() const {
    json j = {{"same_elab", {{"raw", same_elab_mean.raw}, {"rescaled", same_elab_mean.rescaled}}},
              {"n_same_pairs", n_same_pairs},
              {"n_random_pairs", n_random_pairs},
              {"seed", seed}};
    j["random_pair"] = random_pair_mean
                           ? json{{"raw", random_pair_mean->raw}, {"rescaled", random_pair_mean->rescaled}}
                           : json(nullptr);
    return j;
  }
};

// Mean similarity over same-instance question pairs, against a baseline of
// cross-instance pairs from the same document drawn with replacement (seeded)
// in the same number.
inline QuestionSimilarityReport pairwise_question_similarity(const corpus::Dataset& data, const SimilarityMetric& sim,
                                                             std::uint64_t seed) {
  auto same = same_instance_pairs(data);
  if (same.empty()) throw EmptyInputError("no instance has two or more questions");
  QuestionSimilarityReport r;
  r.seed = seed;
  r.n_same_pairs = same.size();
  auto mean = [&](const std::vector<QuestionPair>& pairs) {
    metrics::ScorePair m;
    for (const auto& [a, b] : pairs) {
      auto s = sim(a->question, b->question);
      m.raw += s.raw;
      m.rescaled += s.rescaled;
    }
    m.raw /= static_cast<double>(pairs.size());
    m.rescaled /= static_cast<double>(pairs.size());
    return m;
  };
  r.same_elab_mean = mean(same);
  auto pool = cross_instance_pairs(data);
  if (pool.empty()) {
    util::warn("question similarity: no cross-instance pairs; random baseline omitted");
    return r;
  }
  std::mt19937_64 rng(seed);
  std::vector<QuestionPair> sample;
  sample.reserve(same.size());
  for (std::size_t i = 0; i < same.size(); ++i) sample.push_back(pool[util::bounded(rng, pool.size())]);
  r.n_random_pairs = sample.size();
  r.random_pair_mean = mean(sample);
  return r;
}

struct QuestionTypeDistribution {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, double> proportions;
  std::size_t total = 0;

  json to_json() const { return {{"counts", counts}, {"proportions", proportions}, {"total", total}}; }
};

inline QuestionTypeDistribution tally_question_types(const std::vector<std::string>& labels) {
  if (labels.empty()) throw EmptyInputError("no questions to classify");
  QuestionTypeDistribution d;
  for (const auto& l : labels) {
    if (!backends::is_question_type(l)) throw ValidationError("unknown question type '" + l + "'");
    ++d.counts[l];
  }
  d.total = labels.size();
  for (const auto& [l, c] : d.counts) d.proportions[l] = static_cast<double>(c) / static_cast<double>(d.total);
  return d;
}

inline QuestionTypeDistribution question_type_distribution(const std::vector<std::string>& questions,
                                                           backends::QuestionClassifier& classifier) {
  std::vector<std::string> labels;
  labels.reserve(questions.size());
  for (const auto& q : questions) {
    auto label = classifier.classify(q);
    if (!backends::is_question_type(label)) throw ProtocolError("classifier returned unknown label '" + label + "'");
    labels.push_back(std::move(label));
  }
  return tally_question_types(labels);
}

inline std::vector<std::string> dataset_questions(const corpus::Dataset& data) {
  std::vector<std::string> out;
  for (const auto& a : data.annotations()) {
    if (has_question(a)) out.push_back(a.question);
  }
  return out;
}

}  // namespace elabqud::analysis
