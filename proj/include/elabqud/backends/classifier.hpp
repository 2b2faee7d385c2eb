#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "elabqud/backends/descriptor.hpp"
#include "elabqud/backends/embedding.hpp"

namespace elabqud::backends {

// Ten-way question-type taxonomy used for QUD analysis.
inline const std::vector<std::string>& question_type_labels() {
  static const std::vector<std::string> labels = {"Verification", "Disjunctive", "Concept",     "Extent",
                                                  "Example",      "Comparison",  "Cause",       "Consequence",
                                                  "Procedural",   "Judgmental"};
  return labels;
}

inline bool is_question_type(const std::string& label) {
  const auto& l = question_type_labels();
  return std::find(l.begin(), l.end(), label) != l.end();
}

class QuestionClassifier {
 public:
  virtual ~QuestionClassifier() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::string classify(const std::string& question) = 0;
};

// Keyword heuristics over the question's opening words. A stand-in for a
// trained classifier; every report records which classifier produced it.
class RuleBasedQuestionClassifier : public QuestionClassifier {
 public:
  RuleBasedQuestionClassifier()
      : descriptor_(BackendDescriptor::make(BackendKind::classifier, std::nullopt, {{"type", "rules"}, {"version", 1}})) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::string classify(const std::string& question) override {
    std::string q = " " + lowercase(question) + " ";
    auto has = [&](std::string_view s) { return q.find(s) != std::string::npos; };
    auto starts = [&](std::string_view s) { return q.compare(1, s.size(), s) == 0; };
    if (has("example") || has("such as") || has(" instance")) return "Example";
    if (has("differ") || has("compare") || has("similar") || has(" than ")) return "Comparison";
    if (starts("why") || has("what caused") || has("what is the reason") || has("reason ")) return "Cause";
    if (has("what happen") || has("result") || has("effect") || has("consequence") || has("what will")) {
      return "Consequence";
    }
    if (starts("how much") || starts("how many") || starts("how long") || starts("how far") || starts("how big") ||
        starts("how old")) {
      return "Extent";
    }
    if (starts("how")) return "Procedural";
    if (has("should ") || has(" think") || has("opinion")) return "Judgmental";
    for (auto aux : {"is ", "are ", "was ", "were ", "do ", "does ", "did ", "can ", "could ", "will ", "would ",
                     "has ", "have "}) {
      if (starts(aux)) return has(" or ") ? "Disjunctive" : "Verification";
    }
    return "Concept";
  }

 private:
  BackendDescriptor descriptor_;
};

// Looks each question up in a script; unscripted questions get `fallback`
// or, when that is empty, raise a backend error.
class ScriptedClassifier : public QuestionClassifier {
 public:
  explicit ScriptedClassifier(std::map<std::string, std::string> script, std::string fallback = {})
      : script_(std::move(script)), fallback_(std::move(fallback)),
        descriptor_(BackendDescriptor::make(BackendKind::classifier, std::nullopt, {{"type", "scripted"}})) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::string classify(const std::string& question) override {
    auto it = script_.find(question);
    if (it != script_.end()) return it->second;
    if (fallback_.empty()) throw BackendError("scripted classifier: unscripted question '" + question + "'");
    return fallback_;
  }

 private:
  std::map<std::string, std::string> script_;
  std::string fallback_;
  BackendDescriptor descriptor_;
};

}  // namespace elabqud::backends
