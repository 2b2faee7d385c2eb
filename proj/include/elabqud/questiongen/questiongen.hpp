#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "elabqud/backends/span.hpp"
#include "elabqud/corpus/dataset.hpp"
#include "elabqud/generate.hpp"
#include "elabqud/questiongen/assemble.hpp"
#include "elabqud/util/log.hpp"

namespace elabqud::questiongen {

inline backends::GenerationRecord generate_question(const AssembledPrompt& prompt,
                                                    backends::GenerationBackend& backend,
                                                    const backends::DecodeParams& decode, const GenerationTask& task) {
  GenerationTask t = task;
  t.kind = "question";
  return run_generation(prompt, backend, decode, t, PostProcess::trim);
}

struct PredictedTarget {
  corpus::TargetSpan span;
  bool clamped = false;
};

// Target inside the anchor sentence; out-of-range predictions are clamped to
// the sentence and flagged.
inline PredictedTarget predict_target(const corpus::Sentence& anchor, const corpus::ContextWindow& context,
                                      backends::SpanPredictorBackend& predictor) {
  auto tokens = corpus::tokenize(anchor.text);
  if (tokens.empty()) throw IntegrityError("anchor sentence " + std::to_string(anchor.index) + " has no tokens");
  std::string ctx;
  for (const auto& s : context.pre) {
    if (s.index >= anchor.index) continue;
    if (!ctx.empty()) ctx += ' ';
    ctx += s.text;
  }
  auto raw = predictor.predict(tokens, ctx);
  int n = static_cast<int>(tokens.size());
  int start = std::clamp(raw.start, 0, n - 1);
  int end = std::clamp(raw.end, start + 1, n);
  PredictedTarget out{corpus::make_span(anchor, start, end), start != raw.start || end != raw.end};
  if (out.clamped) {
    util::warn("span predictor returned [" + std::to_string(raw.start) + ", " + std::to_string(raw.end) +
               ") for a " + std::to_string(n) + "-token anchor; clamped");
  }
  return out;
}

struct SpanMetrics {
  double exact_match = 0.0;
  double token_precision = 0.0;  // micro-averaged over predicted tokens
  std::size_t n = 0;

  json to_json() const { return {{"exact_match", exact_match}, {"token_precision", token_precision}, {"n", n}}; }
};

inline SpanMetrics span_prediction_metrics(const std::vector<corpus::TargetSpan>& predicted,
                                           const std::vector<corpus::TargetSpan>& gold) {
  if (predicted.size() != gold.size()) {
    throw AlignmentError("span metrics: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(gold.size()) + " gold spans");
  }
  if (predicted.empty()) throw EmptyInputError("span metrics: no spans");
  SpanMetrics m;
  m.n = predicted.size();
  std::size_t exact = 0, overlap = 0, total = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& p = predicted[i];
    const auto& g = gold[i];
    bool same_sentence = p.sentence_index == g.sentence_index;
    exact += same_sentence && p.start_token == g.start_token && p.end_token == g.end_token;
    total += static_cast<std::size_t>(p.length());
    if (same_sentence) {
      int lo = std::max(p.start_token, g.start_token), hi = std::min(p.end_token, g.end_token);
      if (hi > lo) overlap += static_cast<std::size_t>(hi - lo);
    }
  }
  m.exact_match = static_cast<double>(exact) / static_cast<double>(m.n);
  m.token_precision = total ? static_cast<double>(overlap) / static_cast<double>(total) : 0.0;
  return m;
}

// One generation example per human annotation that carries a question.
struct QGExample {
  const corpus::ElaborationInstance* instance = nullptr;
  const corpus::QUDAnnotation* annotation = nullptr;
};

inline std::vector<QGExample> qg_examples(const corpus::Dataset& data, const std::set<corpus::Split>& splits) {
  std::vector<QGExample> out;
  for (const auto& a : data.annotations()) {
    if (corpus::is_blank(a.question) || !a.target) continue;
    const auto& inst = data.instance(a.instance_id);
    if (!splits.empty() && !splits.count(inst.split)) continue;
    if (a.anchor_index >= inst.elab_index) {
      util::warn("annotation by '" + a.annotator_id + "' on '" + a.instance_id +
                 "' anchors after the elaboration; skipped for question generation");
      continue;
    }
    out.push_back({&inst, &a});
  }
  return out;
}

}  // namespace elabqud::questiongen
