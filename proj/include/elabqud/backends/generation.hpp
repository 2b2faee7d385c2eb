#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "elabqud/backends/gateway.hpp"

namespace elabqud::backends {

struct DecodeParams {
  double temperature = 0.0;
  int max_tokens = 128;
  std::vector<std::string> stop;
  int num_beams = 1;  // 1 = greedy

  void validate() const {
    if (temperature < 0.0) throw ConfigError("decode: temperature must be >= 0");
    if (max_tokens <= 0) throw ConfigError("decode: max_tokens must be positive");
    if (num_beams <= 0) throw ConfigError("decode: num_beams must be positive");
  }

  json to_json() const {
    json j = {{"temperature", temperature}, {"max_tokens", max_tokens}, {"stop", stop}};
    if (num_beams != 1) j["num_beams"] = num_beams;
    return j;
  }

  static DecodeParams from_json(const json& j) {
    DecodeParams d;
    d.temperature = j.value("temperature", d.temperature);
    d.max_tokens = j.value("max_tokens", d.max_tokens);
    d.stop = j.value("stop", d.stop);
    d.num_beams = j.value("num_beams", d.num_beams);
    d.validate();
    return d;
  }
};

struct GenerationRequest {
  std::string prompt;
  DecodeParams decode;

  json to_json() const {
    json j = {{"prompt", prompt},
              {"max_tokens", decode.max_tokens},
              {"temperature", decode.temperature},
              {"stop", decode.stop}};
    if (decode.num_beams != 1) j["num_beams"] = decode.num_beams;
    return j;
  }
};

struct GenerationResponse {
  std::string text;
  std::string finish_reason;
};

// Hash of the canonical request; scripts for the mock are keyed by it.
inline std::string request_fingerprint(const json& request) { return util::sha256_hex(canonical_json(request)); }

inline void validate_generation_response(const json& r) {
  if (!r.is_object() || !r.contains("text") || !r["text"].is_string()) {
    throw ProtocolError("generation response must be an object with a string 'text'");
  }
  if (r.contains("finish_reason") && !r["finish_reason"].is_string() && !r["finish_reason"].is_null()) {
    throw ProtocolError("generation response 'finish_reason' must be a string");
  }
}

// A generation backend as seen by the pipeline: a transport behind a gateway,
// plus an optional prompt-length limit measured in canonical tokens.
class GenerationBackend {
 public:
  GenerationBackend(BackendDescriptor descriptor, std::shared_ptr<Transport> transport, GatewayOptions options = {},
                    std::optional<int> context_limit = std::nullopt)
      : gateway_(std::move(descriptor), std::move(transport), std::move(options), validate_generation_response),
        context_limit_(context_limit) {}

  const BackendDescriptor& descriptor() const { return gateway_.descriptor(); }
  std::optional<int> context_limit() const { return context_limit_; }
  Gateway& gateway() { return gateway_; }

  GenerationResponse generate(const GenerationRequest& request) {
    json r = gateway_.call(request.to_json());
    std::string finish = r.contains("finish_reason") && r["finish_reason"].is_string()
                             ? r["finish_reason"].get<std::string>()
                             : std::string("stop");
    return {r["text"].get<std::string>(), finish};
  }

 private:
  Gateway gateway_;
  std::optional<int> context_limit_;
};

enum class MockFallback { error, fixed, echo };

// Deterministic stand-in for a generation API. Lookup order: request
// fingerprint, then exact prompt text, then the fallback.
class ScriptedMock : public Transport {
 public:
  explicit ScriptedMock(std::map<std::string, std::string> by_fingerprint = {},
                        MockFallback fallback = MockFallback::error, std::string fixed_text = {})
      : by_fingerprint_(std::move(by_fingerprint)), fallback_(fallback), fixed_text_(std::move(fixed_text)) {}

  ScriptedMock& on_prompt(std::string prompt, std::string text) {
    by_prompt_[std::move(prompt)] = std::move(text);
    return *this;
  }

  static std::string echo_text(const std::string& prompt) { return "echo " + util::sha256_hex(prompt).substr(0, 12); }

  json invoke(const json& request) override {
    auto fp = by_fingerprint_.find(request_fingerprint(request));
    if (fp != by_fingerprint_.end()) return respond(fp->second);
    std::string prompt = request.value("prompt", "");
    auto bp = by_prompt_.find(prompt);
    if (bp != by_prompt_.end()) return respond(bp->second);
    switch (fallback_) {
      case MockFallback::fixed: return respond(fixed_text_);
      case MockFallback::echo: return respond(echo_text(prompt));
      case MockFallback::error: break;
    }
    throw ScriptedMissError("scripted mock: no response for request " + request_fingerprint(request).substr(0, 16));
  }

  json descriptor_params() const {
    json script = json::object();
    for (const auto& [k, v] : by_fingerprint_) script[k] = v;
    json prompts = json::object();
    for (const auto& [k, v] : by_prompt_) prompts[k] = v;
    static const char* names[] = {"error", "fixed", "echo"};
    return {{"type", "scripted-mock"},
            {"script_sha256", util::sha256_hex(canonical_json({script, prompts}))},
            {"fallback", names[static_cast<int>(fallback_)]},
            {"fixed_text", fixed_text_}};
  }

 private:
  static json respond(const std::string& text) { return {{"text", text}, {"finish_reason", "stop"}}; }

  std::map<std::string, std::string> by_fingerprint_;
  std::map<std::string, std::string> by_prompt_;
  MockFallback fallback_;
  std::string fixed_text_;
};

inline std::shared_ptr<ScriptedMock> scripted_mock(std::map<std::string, std::string> script,
                                                   MockFallback fallback = MockFallback::error,
                                                   std::string fixed_text = {}) {
  return std::make_shared<ScriptedMock>(std::move(script), fallback, std::move(fixed_text));
}

// Convenience: a GenerationBackend over a scripted mock whose descriptor
// fingerprints the script.
inline std::unique_ptr<GenerationBackend> make_mock_backend(std::shared_ptr<ScriptedMock> mock,
                                                            GatewayOptions options = {},
                                                            std::optional<int> context_limit = std::nullopt) {
  auto desc = BackendDescriptor::make(BackendKind::generation, std::nullopt, mock->descriptor_params());
  return std::make_unique<GenerationBackend>(std::move(desc), std::move(mock), std::move(options), context_limit);
}

// A backend-produced question or elaboration with full provenance.
struct GenerationRecord {
  std::string kind;          // "question" or "elaboration"
  std::string instance_id;
  std::string system;        // QG config name or elaboration condition label
  std::string layout_version;
  std::string prompt;
  std::string prompt_sha256;
  std::string backend_id;
  DecodeParams decode;
  std::string cache_key;
  std::string text;
  std::string finish_reason;
  int truncated_context_sentences = 0;
  json extra = json::object();  // e.g. annotator_id of the gold annotation, target span used

  json to_json() const {
    return {{"kind", kind},
            {"instance_id", instance_id},
            {"system", system},
            {"layout_version", layout_version},
            {"prompt", prompt},
            {"prompt_sha256", prompt_sha256},
            {"backend_id", backend_id},
            {"decode", decode.to_json()},
            {"cache_key", cache_key},
            {"text", text},
            {"finish_reason", finish_reason},
            {"truncated_context_sentences", truncated_context_sentences},
            {"extra", extra}};
  }

  static GenerationRecord from_json(const json& j) {
    GenerationRecord r;
    r.kind = j.at("kind").get<std::string>();
    r.instance_id = j.at("instance_id").get<std::string>();
    r.system = j.at("system").get<std::string>();
    r.layout_version = j.value("layout_version", "");
    r.prompt = j.at("prompt").get<std::string>();
    r.prompt_sha256 = j.value("prompt_sha256", "");
    r.backend_id = j.value("backend_id", "");
    r.decode = DecodeParams::from_json(j.value("decode", json::object()));
    r.cache_key = j.value("cache_key", "");
    r.text = j.at("text").get<std::string>();
    r.finish_reason = j.value("finish_reason", "");
    r.truncated_context_sentences = j.value("truncated_context_sentences", 0);
    r.extra = j.value("extra", json::object());
    return r;
  }

  friend bool operator==(const GenerationRecord& a, const GenerationRecord& b) { return a.to_json() == b.to_json(); }
};

}  // namespace elabqud::backends
