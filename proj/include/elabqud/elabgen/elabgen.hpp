#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elabqud/corpus/types.hpp"
#include "elabqud/generate.hpp"

namespace elabqud::elabgen {

inline constexpr const char* kElabLayoutVersion = "elab-layout/1";
inline constexpr const char* kGenericInstruction = "Please explain the last sentence in simple terms:";

enum class ConditionKind { context_only, generic, qud };

inline std::string to_string(ConditionKind k) {
  switch (k) {
    case ConditionKind::context_only: return "context_only";
    case ConditionKind::generic: return "generic";
    case ConditionKind::qud: return "qud";
  }
  return "context_only";
}

inline std::string condition_names() { return "context_only, generic, qud"; }

inline ConditionKind parse_condition(const std::string& s) {
  if (s == "context_only") return ConditionKind::context_only;
  if (s == "generic") return ConditionKind::generic;
  if (s == "qud") return ConditionKind::qud;
  throw ConfigError("unknown elaboration condition '" + s + "'; expected one of: " + condition_names());
}

struct ElabPromptCondition {
  ConditionKind kind = ConditionKind::context_only;
  std::optional<std::string> question;  // present exactly when kind == qud

  void validate() const {
    if (kind == ConditionKind::qud && (!question || corpus::is_blank(*question))) {
      throw ConfigError("qud condition needs a question");
    }
    if (kind != ConditionKind::qud && question) throw ConfigError(to_string(kind) + " condition takes no question");
  }
};

// Only the pre-elaboration context is used; E and the post context never are.
//   context_only: "<ctx>"
//   generic:      "<ctx>\n<instruction>"
//   qud:          "Context: <ctx>\nQuestion: <q>\nAnswer:"
// Context sentences are joined by single spaces.
inline AssembledPrompt build_elab_prompt(const corpus::ContextWindow& context, const ElabPromptCondition& condition) {
  condition.validate();
  if (condition.kind != ConditionKind::context_only && context.pre.empty()) {
    throw ConfigError(to_string(condition.kind) + " condition needs a non-empty context");
  }
  AssembledPrompt p;
  p.layout = "elab-" + to_string(condition.kind);
  p.layout_version = kElabLayoutVersion;
  p.joiner = "";
  auto add_context = [&] {
    for (std::size_t i = 0; i < context.pre.size(); ++i) {
      if (i > 0) p.segments.push_back({"separator", " "});
      p.segments.push_back({"context", context.pre[i].text});
    }
  };
  switch (condition.kind) {
    case ConditionKind::context_only:
      add_context();
      break;
    case ConditionKind::generic:
      add_context();
      p.segments.push_back({"separator", "\n"});
      p.segments.push_back({"instruction", kGenericInstruction});
      break;
    case ConditionKind::qud:
      p.segments.push_back({"cue", "Context: "});
      add_context();
      p.segments.push_back({"cue", "\nQuestion: "});
      p.segments.push_back({"question", trim(*condition.question)});
      p.segments.push_back({"cue", "\nAnswer:"});
      break;
  }
  return p.finalize();
}

inline backends::GenerationRecord generate_elaboration(const AssembledPrompt& prompt,
                                                       backends::GenerationBackend& backend,
                                                       const backends::DecodeParams& decode,
                                                       const GenerationTask& task) {
  GenerationTask t = task;
  t.kind = "elaboration";
  return run_generation(prompt, backend, decode, t, PostProcess::first_line);
}

}  // namespace elabqud::elabgen
