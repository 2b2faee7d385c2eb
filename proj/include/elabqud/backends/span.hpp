#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "elabqud/backends/gateway.hpp"

namespace elabqud::backends {

// Raw token offsets proposed by a predictor; [start, end) within the anchor.
struct RawSpan {
  int start = 0;
  int end = 0;
};

// Extractive target predictor in the SQuAD arrangement: the prior context plays
// the question, the anchor sentence plays the passage.
class SpanPredictorBackend {
 public:
  virtual ~SpanPredictorBackend() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  virtual RawSpan predict(const std::vector<std::string>& anchor_tokens, const std::string& context) = 0;
};

class WholeSentencePredictor : public SpanPredictorBackend {
 public:
  WholeSentencePredictor()
      : descriptor_(BackendDescriptor::make(BackendKind::span, std::nullopt, {{"type", "whole-sentence"}})) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  RawSpan predict(const std::vector<std::string>& anchor_tokens, const std::string&) override {
    return {0, static_cast<int>(anchor_tokens.size())};
  }

 private:
  BackendDescriptor descriptor_;
};

// Answers from a table keyed by the anchor's token sequence joined with
// spaces; unscripted anchors fall back to the whole sentence.
class ScriptedSpanPredictor : public SpanPredictorBackend {
 public:
  explicit ScriptedSpanPredictor(std::map<std::string, RawSpan> script)
      : script_(std::move(script)),
        descriptor_(BackendDescriptor::make(BackendKind::span, std::nullopt, {{"type", "scripted"}})) {}

  static std::string key(const std::vector<std::string>& tokens) {
    std::string k;
    for (const auto& t : tokens) {
      if (!k.empty()) k += ' ';
      k += t;
    }
    return k;
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  RawSpan predict(const std::vector<std::string>& anchor_tokens, const std::string&) override {
    auto it = script_.find(key(anchor_tokens));
    if (it != script_.end()) return it->second;
    return {0, static_cast<int>(anchor_tokens.size())};
  }

 private:
  std::map<std::string, RawSpan> script_;
  BackendDescriptor descriptor_;
};

// Remote predictor: request {"question": context, "context": anchor text,
// "tokens": [...]} -> response {"start_token": i, "end_token": j}.
class GatewaySpanPredictor : public SpanPredictorBackend {
 public:
  GatewaySpanPredictor(BackendDescriptor descriptor, std::shared_ptr<Transport> transport, GatewayOptions options = {})
      : gateway_(std::move(descriptor), std::move(transport), std::move(options), validate) {}

  const BackendDescriptor& descriptor() const override { return gateway_.descriptor(); }

  RawSpan predict(const std::vector<std::string>& anchor_tokens, const std::string& context) override {
    json r = gateway_.call({{"question", context}, {"context", ScriptedSpanPredictor::key(anchor_tokens)},
                            {"tokens", anchor_tokens}});
    return {r["start_token"].get<int>(), r["end_token"].get<int>()};
  }

 private:
  static void validate(const json& r) {
    if (!r.is_object() || !r.contains("start_token") || !r.contains("end_token") ||
        !r["start_token"].is_number_integer() || !r["end_token"].is_number_integer()) {
      throw ProtocolError("span response must contain integer 'start_token' and 'end_token'");
    }
  }

  Gateway gateway_;
};

}  // namespace elabqud::backends
