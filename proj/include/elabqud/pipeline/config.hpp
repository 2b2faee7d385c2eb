#pragma once

// Run configuration: one JSON file naming the dataset, backends, seeds,
// thresholds and window sizes. Relative paths resolve against the workspace
// root, which itself resolves against the config file's directory.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "elabqud/analysis/targets.hpp"
#include "elabqud/backends/generation.hpp"
#include "elabqud/corpus/types.hpp"
#include "elabqud/corpus/window.hpp"
#include "elabqud/errors.hpp"
#include "elabqud/metrics/bleu.hpp"
#include "json.hpp"

namespace elabqud::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

inline std::string read_text(const fs::path& path, const char* what) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path, const char* what) {
  std::string text = read_text(path, what);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, what, path.string() + ": " + e.what());
  }
}

struct Overrides {
  std::optional<std::string> workspace;
  std::optional<std::string> dataset;
  std::optional<std::string> output_dir;
  std::optional<std::string> cache_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_in_flight;
  std::optional<std::vector<std::string>> splits;
};

struct Config {
  fs::path workspace;
  json raw;  // the file after overrides; snapshotted into every manifest

  std::string dataset;
  std::string output_dir = "out";
  std::optional<std::string> cache_dir;
  std::uint64_t seed = 0;
  int pre_window = corpus::kPreWindow;
  int post_window = corpus::kPostWindow;
  std::set<corpus::Split> splits;  // empty = all
  double guardrail_overlap = 0.5;
  analysis::OverlapPolicy overlap_policy = analysis::OverlapPolicy::any_token;
  int max_in_flight = 4;
  double requests_per_minute = 0.0;
  backends::RetryPolicy retry;
  backends::DecodeParams question_decode;
  backends::DecodeParams elaboration_decode;
  metrics::BleuOptions bleu;
  std::optional<std::string> delimiters;
  std::optional<std::string> frequency_lexicon;
  analysis::FrequencyOptions frequency;
  std::optional<std::string> relation_labels;
  json backends = json::object();

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : workspace / path;
  }

  fs::path output_path(const std::string& name) const { return resolve(output_dir) / name; }

  backends::GatewayOptions gateway_options() const {
    backends::GatewayOptions o;
    o.retry = retry;
    o.requests_per_minute = requests_per_minute;
    o.max_in_flight = max_in_flight;
    if (cache_dir) o.cache_dir = resolve(*cache_dir);
    return o;
  }

  // Backend spec for a role; question_generation may be keyed by QG config
  // name with an optional "default" entry.
  json backend_spec(const std::string& role, const std::string& system = {}) const {
    if (!backends.contains(role)) throw ConfigError("config has no backend for role '" + role + "'");
    const json& spec = backends.at(role);
    if (!spec.is_object()) throw ConfigError("backend '" + role + "' must be an object");
    if (spec.contains("type")) return spec;
    if (!system.empty() && spec.contains(system)) return spec.at(system);
    if (spec.contains("default")) return spec.at("default");
    throw ConfigError("backend '" + role + "' has no entry for '" + system + "' and no default");
  }
};

namespace detail {

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: '" + where + key + "' has the wrong type");
  }
}

inline std::optional<std::string> get_path(const json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) throw ConfigError(std::string("config: '") + key + "' must be a path string");
  return obj.at(key).get<std::string>();
}

inline void apply_overrides(json& j, const Overrides& o) {
  if (o.workspace) j["workspace"] = *o.workspace;
  if (o.dataset) j["dataset"] = *o.dataset;
  if (o.output_dir) j["output_dir"] = *o.output_dir;
  if (o.cache_dir) j["cache_dir"] = *o.cache_dir;
  if (o.seed) j["seed"] = *o.seed;
  if (o.max_in_flight) j["concurrency"]["max_in_flight"] = *o.max_in_flight;
  if (o.splits) j["splits"] = *o.splits;
}

}  // namespace detail

// `base_dir` anchors a relative workspace; for a file it is the file's directory.
inline Config parse_config(json j, const fs::path& base_dir, const Overrides& overrides = {}) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::apply_overrides(j, overrides);
  Config c;
  c.raw = j;
  fs::path ws(detail::get_or<std::string>(j, "workspace", ".", ""));
  c.workspace = (ws.is_absolute() ? ws : base_dir / ws).lexically_normal();

  c.dataset = detail::get_or<std::string>(j, "dataset", "", "");
  c.output_dir = detail::get_or<std::string>(j, "output_dir", c.output_dir, "");
  c.cache_dir = detail::get_path(j, "cache_dir");
  c.seed = detail::get_or<std::uint64_t>(j, "seed", 0, "");

  json window = detail::get_or<json>(j, "window", json::object(), "");
  c.pre_window = detail::get_or<int>(window, "pre", c.pre_window, "window.");
  c.post_window = detail::get_or<int>(window, "post", c.post_window, "window.");
  if (c.pre_window < 0 || c.post_window < 0) throw ConfigError("config: window sizes must be >= 0");

  for (const auto& s : detail::get_or<std::vector<std::string>>(j, "splits", {}, "")) {
    auto split = corpus::parse_split(s);
    if (!split) throw ConfigError("config: unknown split '" + s + "'; expected train, validation or test");
    c.splits.insert(*split);
  }

  json th = detail::get_or<json>(j, "thresholds", json::object(), "");
  c.guardrail_overlap = detail::get_or<double>(th, "guardrail_overlap", c.guardrail_overlap, "thresholds.");
  if (c.guardrail_overlap <= 0.0 || c.guardrail_overlap > 1.0) {
    throw ConfigError("config: thresholds.guardrail_overlap must be in (0, 1]");
  }
  c.overlap_policy = analysis::parse_overlap_policy(detail::get_or<std::string>(th, "overlap_policy", "any_token", ""));

  json cc = detail::get_or<json>(j, "concurrency", json::object(), "");
  c.max_in_flight = detail::get_or<int>(cc, "max_in_flight", c.max_in_flight, "concurrency.");
  if (c.max_in_flight < 1) throw ConfigError("config: concurrency.max_in_flight must be >= 1");
  c.requests_per_minute = detail::get_or<double>(cc, "requests_per_minute", 0.0, "concurrency.");
  c.retry.max_retries = detail::get_or<int>(cc, "max_retries", c.retry.max_retries, "concurrency.");
  c.retry.base_delay = std::chrono::milliseconds(
      detail::get_or<long>(cc, "base_delay_ms", static_cast<long>(c.retry.base_delay.count()), "concurrency."));
  c.retry.max_delay = std::chrono::milliseconds(
      detail::get_or<long>(cc, "max_delay_ms", static_cast<long>(c.retry.max_delay.count()), "concurrency."));

  json decode = detail::get_or<json>(j, "decode", json::object(), "");
  c.question_decode = backends::DecodeParams::from_json(detail::get_or<json>(decode, "question", json::object(), ""));
  c.elaboration_decode =
      backends::DecodeParams::from_json(detail::get_or<json>(decode, "elaboration", json::object(), ""));

  json bleu = detail::get_or<json>(j, "bleu", json::object(), "");
  c.bleu.smoothing = metrics::parse_smoothing(detail::get_or<std::string>(bleu, "smoothing", "add-k", "bleu."));
  c.bleu.k = detail::get_or<double>(bleu, "k", 1.0, "bleu.");

  c.delimiters = detail::get_path(j, "delimiters");
  c.frequency_lexicon = detail::get_path(j, "frequency_lexicon");
  json freq = detail::get_or<json>(j, "frequency", json::object(), "");
  std::string oov = detail::get_or<std::string>(freq, "oov", "floor", "frequency.");
  if (oov != "floor" && oov != "drop") throw ConfigError("config: frequency.oov must be floor or drop");
  c.frequency.oov = oov == "floor" ? analysis::OovPolicy::floor : analysis::OovPolicy::drop;
  c.frequency.oov_floor = detail::get_or<double>(freq, "oov_floor", c.frequency.oov_floor, "frequency.");
  c.frequency.welch = detail::get_or<bool>(freq, "welch", true, "frequency.");
  c.relation_labels = detail::get_path(j, "relation_labels");

  c.backends = detail::get_or<json>(j, "backends", json::object(), "");
  return c;
}

inline Config load_config(const fs::path& path, const Overrides& overrides = {}) {
  json j = read_json(path, "config");
  return parse_config(std::move(j), fs::absolute(path).parent_path(), overrides);
}

}  // namespace elabqud::pipeline
