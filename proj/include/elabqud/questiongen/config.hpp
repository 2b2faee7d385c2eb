#pragma once

#include <string>
#include <vector>

#include "elabqud/errors.hpp"
#include "json.hpp"

namespace elabqud::questiongen {

using nlohmann::json;

enum class TargetSource { none, gold, predicted };

inline std::string to_string(TargetSource t) {
  switch (t) {
    case TargetSource::none: return "none";
    case TargetSource::gold: return "gold";
    case TargetSource::predicted: return "predicted";
  }
  return "none";
}

// Fine-tuning recipe, kept as metadata. Training is not run here.
struct TrainingRecipe {
  double learning_rate = 0.0;
  int epochs = 0;
  int batch_size = 0;
  std::string base_checkpoint_label;

  json to_json() const {
    return {{"learning_rate", learning_rate}, {"epochs", epochs}, {"batch_size", batch_size},
            {"base_checkpoint_label", base_checkpoint_label}};
  }
};

struct QGConfig {
  std::string name;
  bool sees_elaboration = false;
  TargetSource target_source = TargetSource::none;
  TrainingRecipe recipe;

  // DCQA-base/ft share one input format, as do INQ-GoldT-base/ft.
  std::string layout() const { return sees_elaboration ? "dcqa" : "inq"; }

  json to_json() const {
    return {{"name", name}, {"sees_elaboration", sees_elaboration}, {"target_source", to_string(target_source)},
            {"layout", layout()}, {"training_recipe", recipe.to_json()}};
  }
};

inline const std::vector<QGConfig>& qg_configs() {
  static const std::vector<QGConfig> configs = {
      {"DCQA-base", true, TargetSource::none, {5e-5, 5, 8, "dcqa"}},
      {"DCQA-ft", true, TargetSource::none, {2e-5, 5, 2, "DCQA-base"}},
      {"INQ-GoldT-base", false, TargetSource::gold, {5e-5, 7, 8, "inquisitive"}},
      {"INQ-GoldT-ft", false, TargetSource::gold, {2e-5, 5, 2, "INQ-GoldT-base"}},
      {"INQ-PredT", false, TargetSource::predicted, {2e-5, 5, 2, "INQ-GoldT-base"}},
  };
  return configs;
}

// Recipe of the span predictor feeding INQ-PredT.
inline TrainingRecipe target_prediction_recipe() { return {5e-5, 3, 16, "squad-style span extractor"}; }

inline std::string qg_config_names() {
  std::string out;
  for (const auto& c : qg_configs()) out += (out.empty() ? "" : ", ") + c.name;
  return out;
}

inline const QGConfig& find_qg_config(const std::string& name) {
  for (const auto& c : qg_configs()) {
    if (c.name == name) return c;
  }
  throw ConfigError("unknown question generation config '" + name + "'; expected one of: " + qg_config_names());
}

}  // namespace elabqud::questiongen
