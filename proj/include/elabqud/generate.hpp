#pragma once

#include <string>

#include "elabqud/backends/cache.hpp"
#include "elabqud/backends/generation.hpp"
#include "elabqud/corpus/tokenize.hpp"
#include "elabqud/prompt.hpp"

namespace elabqud {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string first_nonempty_line(const std::string& s) {
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    auto line = trim(s.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
    if (!line.empty()) return line;
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return {};
}

inline std::size_t prompt_length(const std::string& rendered) { return corpus::tokenize(rendered).size(); }

// Drops the earliest context segments until the prompt fits the backend's
// context limit. Returns the prompt actually sent and the number dropped.
inline std::pair<AssembledPrompt, int> fit_to_context(const AssembledPrompt& prompt,
                                                      const backends::GenerationBackend& backend) {
  auto limit = backend.context_limit();
  if (!limit || prompt_length(prompt.rendered) <= static_cast<std::size_t>(*limit)) return {prompt, 0};
  std::size_t contexts = prompt.count("context");
  for (std::size_t n = 1; n <= contexts; ++n) {
    auto p = prompt.without_leading_context(n);
    if (prompt_length(p.rendered) <= static_cast<std::size_t>(*limit)) return {p, static_cast<int>(n)};
  }
  throw ValidationError("prompt exceeds the backend context limit of " + std::to_string(*limit) +
                        " tokens even with all context dropped");
}

struct GenerationTask {
  std::string kind;  // "question" or "elaboration"
  std::string instance_id;
  std::string system;
  json extra = json::object();
};

enum class PostProcess { trim, first_line };

inline backends::GenerationRecord run_generation(const AssembledPrompt& prompt, backends::GenerationBackend& backend,
                                                 const backends::DecodeParams& decode, const GenerationTask& task,
                                                 PostProcess post) {
  decode.validate();
  auto [sent, dropped] = fit_to_context(prompt, backend);
  backends::GenerationRequest request{sent.rendered, decode};
  auto response = backend.generate(request);
  std::string text = post == PostProcess::first_line ? first_nonempty_line(response.text) : trim(response.text);
  if (text.empty()) {
    throw DegenerateOutputError("empty " + task.kind + " generated for instance '" + task.instance_id + "' (" +
                                task.system + ")");
  }
  backends::GenerationRecord r;
  r.kind = task.kind;
  r.instance_id = task.instance_id;
  r.system = task.system;
  r.layout_version = sent.layout_version;
  r.prompt = sent.rendered;
  r.prompt_sha256 = sent.sha256();
  r.backend_id = backend.descriptor().backend_id;
  r.decode = decode;
  r.cache_key = backends::cache_key(r.backend_id, request.to_json());
  r.text = std::move(text);
  r.finish_reason = response.finish_reason;
  r.truncated_context_sentences = dropped;
  r.extra = task.extra;
  return r;
}

}  // namespace elabqud
