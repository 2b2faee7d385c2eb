#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "elabqud/corpus/types.hpp"
#include "elabqud/prompt.hpp"
#include "elabqud/questiongen/config.hpp"

namespace elabqud::questiongen {

inline constexpr const char* kQgLayoutVersion = "qg-layout/1";

using DelimiterMap = std::map<std::string, std::string>;

inline const std::vector<std::string>& delimiter_roles() {
  static const std::vector<std::string> roles = {"anchor-open", "anchor-close", "elaboration-open",
                                                 "target-open", "target-close", "question-cue"};
  return roles;
}

inline DelimiterMap default_delimiters() {
  return {{"anchor-open", "<anchor>"},     {"anchor-close", "</anchor>"}, {"elaboration-open", "<elaboration>"},
          {"target-open", "<target>"},     {"target-close", "</target>"}, {"question-cue", "<question>"}};
}

// A JSON object giving a delimiter string for every role.
inline DelimiterMap load_delimiters(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open delimiter file '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("delimiter file '" + path + "': " + e.what());
  }
  DelimiterMap m;
  for (const auto& role : delimiter_roles()) {
    if (!j.contains(role) || !j[role].is_string() || j[role].get<std::string>().empty()) {
      throw ConfigError("delimiter file '" + path + "' lacks a non-empty string for '" + role + "'");
    }
    m[role] = j[role].get<std::string>();
  }
  return m;
}

// Model input for one (instance, config).
//   dcqa: all sentences before E, anchor enclosed, then E and the question cue
//   inq:  all sentences before the anchor, the anchor with the target enclosed,
//         then the question cue
inline AssembledPrompt assemble_qg_input(const corpus::Document& doc, const corpus::ElaborationInstance& instance,
                                         int anchor_index, const QGConfig& config,
                                         const std::optional<corpus::TargetSpan>& target,
                                         const DelimiterMap& delimiters = default_delimiters()) {
  if (instance.doc_id != doc.doc_id) {
    throw IntegrityError("instance '" + instance.instance_id + "' does not belong to document '" + doc.doc_id + "'");
  }
  if (anchor_index < 0 || anchor_index >= instance.elab_index) {
    throw IntegrityError("instance '" + instance.instance_id + "': anchor " + std::to_string(anchor_index) +
                         " is not in the context before the elaboration");
  }
  AssembledPrompt p;
  p.layout = config.layout();
  p.layout_version = kQgLayoutVersion;
  p.delimiters = delimiters;
  p.joiner = " ";
  auto text = [&](int i) { return doc.at(i).text; };

  if (config.sees_elaboration) {
    for (int i = 0; i < instance.elab_index; ++i) {
      if (i == anchor_index) {
        p.segments.push_back({"anchor-open", ""});
        p.segments.push_back({"anchor", text(i)});
        p.segments.push_back({"anchor-close", ""});
      } else {
        p.segments.push_back({"context", text(i)});
      }
    }
    p.segments.push_back({"elaboration-open", ""});
    p.segments.push_back({"elaboration", text(instance.elab_index)});
    p.segments.push_back({"question-cue", ""});
    return p.finalize();
  }

  if (!target) {
    throw ConfigError("config " + config.name + " needs a " + to_string(config.target_source) +
                      " target for instance '" + instance.instance_id + "'");
  }
  if (target->sentence_index != anchor_index) {
    throw IntegrityError("instance '" + instance.instance_id + "': target lies outside the anchor sentence");
  }
  for (int i = 0; i < anchor_index; ++i) p.segments.push_back({"context", text(i)});
  auto tokens = corpus::tokenize(text(anchor_index));
  auto span = corpus::make_span(doc.at(anchor_index), target->start_token, target->end_token);
  std::size_t b = static_cast<std::size_t>(span.start_token), e = static_cast<std::size_t>(span.end_token);
  if (b > 0) p.segments.push_back({"anchor", corpus::detokenize(tokens, 0, b)});
  p.segments.push_back({"target-open", ""});
  p.segments.push_back({"target", corpus::detokenize(tokens, b, e)});
  p.segments.push_back({"target-close", ""});
  if (e < tokens.size()) p.segments.push_back({"anchor", corpus::detokenize(tokens, e, tokens.size())});
  p.segments.push_back({"question-cue", ""});
  return p.finalize();
}

}  // namespace elabqud::questiongen
