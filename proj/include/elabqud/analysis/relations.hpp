#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "elabqud/errors.hpp"
#include "json.hpp"

namespace elabqud::analysis {

using nlohmann::json;

// PDTB-3 level-2 senses, plus the non-sense relation types.
inline const std::vector<std::string>& pdtb3_level2_labels() {
  static const std::vector<std::string> labels = {
      "Temporal.Asynchronous",        "Temporal.Synchronous",
      "Contingency.Cause",            "Contingency.Cause+Belief",
      "Contingency.Cause+SpeechAct",  "Contingency.Condition",
      "Contingency.Condition+SpeechAct", "Contingency.Negative-condition",
      "Contingency.Purpose",          "Comparison.Contrast",
      "Comparison.Concession",        "Comparison.Concession+SpeechAct",
      "Comparison.Similarity",        "Expansion.Conjunction",
      "Expansion.Disjunction",        "Expansion.Equivalence",
      "Expansion.Exception",          "Expansion.Instantiation",
      "Expansion.Level-of-detail",    "Expansion.Manner",
      "Expansion.Substitution",       "EntRel",
      "NoRel",                        "Hypophora",
  };
  return labels;
}

inline bool is_pdtb3_label(const std::string& l) {
  const auto& all = pdtb3_level2_labels();
  return std::find(all.begin(), all.end(), l) != all.end();
}

struct RelationDistribution {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, double> proportions;
  std::size_t total = 0;

  json to_json() const { return {{"counts", counts}, {"proportions", proportions}, {"total", total}}; }
};

// Tallies externally supplied (instance_id, label) pairs.
inline RelationDistribution relation_distribution(const std::vector<std::pair<std::string, std::string>>& labels) {
  if (labels.empty()) throw EmptyInputError("no relation labels supplied");
  RelationDistribution d;
  for (const auto& [id, label] : labels) {
    if (!is_pdtb3_label(label)) {
      std::string known;
      for (const auto& l : pdtb3_level2_labels()) known += (known.empty() ? "" : ", ") + l;
      throw ValidationError("instance '" + id + "': unknown relation label '" + label + "'; expected one of: " + known);
    }
    ++d.counts[label];
  }
  d.total = labels.size();
  for (const auto& [l, c] : d.counts) d.proportions[l] = static_cast<double>(c) / static_cast<double>(d.total);
  return d;
}

// Label -> proportion, as shipped in data/pdtb3_reference.json.
inline std::map<std::string, double> load_relation_reference(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open relation reference '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError(0, "<json>", e.what());
  }
  std::map<std::string, double> out;
  for (auto& [k, v] : j.items()) {
    if (!is_pdtb3_label(k)) throw ValidationError("reference has unknown label '" + k + "'");
    out[k] = v.get<double>();
  }
  return out;
}

}  // namespace elabqud::analysis
