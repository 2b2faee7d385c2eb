#pragma once

// Per-command state: the parsed config, the dataset, backends built from the
// config, and a record of every input file read. Together these make up the
// run manifest embedded in each output file.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "elabqud/backends/classifier.hpp"
#include "elabqud/backends/embedding.hpp"
#include "elabqud/backends/generation.hpp"
#include "elabqud/backends/remote.hpp"
#include "elabqud/backends/span.hpp"
#include "elabqud/backends/tagger.hpp"
#include "elabqud/corpus/dataset.hpp"
#include "elabqud/corpus/tokenize.hpp"
#include "elabqud/pipeline/config.hpp"
#include "elabqud/questiongen/assemble.hpp"

namespace elabqud::pipeline {

inline constexpr const char* kToolVersion = "elabqud/0.1.0";
inline constexpr const char* kOutputFormat = "elabqud-output/1";

class RunContext {
 public:
  RunContext(Config config, std::string command, json args)
      : config_(std::move(config)), command_(std::move(command)), args_(std::move(args)) {}

  const Config& config() const { return config_; }
  const std::string& command() const { return command_; }

  const corpus::Dataset& dataset() {
    if (!dataset_) {
      if (config_.dataset.empty()) throw ConfigError("config names no dataset");
      auto path = config_.resolve(config_.dataset);
      if (!fs::exists(path)) throw ConfigError("dataset '" + path.string() + "' does not exist");
      dataset_ = std::make_unique<corpus::Dataset>(corpus::load_dataset(path.string()));
      dataset_fingerprint_ = corpus::dataset_fingerprint(*dataset_);
    }
    return *dataset_;
  }

  // Reads a workspace file and records its content hash for the manifest.
  std::string input_text(const std::string& path, const char* what) {
    std::string text = read_text(config_.resolve(path), what);
    inputs_[path] = util::sha256_hex(text);
    return text;
  }

  json input_json(const std::string& path, const char* what) {
    std::string text = input_text(path, what);
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(0, what, path + ": " + e.what());
    }
  }

  // Path for a file-backed loader that opens the file itself; the hash is
  // still recorded.
  std::string input_path(const std::string& path, const char* what) {
    input_text(path, what);
    return config_.resolve(path).string();
  }

  const questiongen::DelimiterMap& delimiters() {
    if (!delimiters_) {
      delimiters_ = config_.delimiters ? questiongen::load_delimiters(input_path(*config_.delimiters, "delimiters"))
                                       : questiongen::default_delimiters();
    }
    return *delimiters_;
  }

  backends::GenerationBackend& generator(const std::string& role, const std::string& system = {}) {
    json spec = config_.backend_spec(role, system);
    std::string key = role + "\n" + spec.dump();
    auto it = generators_.find(key);
    if (it != generators_.end()) return *it->second;
    auto backend = make_generator(spec, role);
    note_descriptor(role + (system.empty() ? "" : ":" + system), backend->descriptor());
    return *generators_.emplace(key, std::move(backend)).first->second;
  }

  backends::EmbeddingBackend& embedder() {
    if (!embedder_) {
      embedder_ = make_embedder(config_.backend_spec("embedding"));
      note_descriptor("embedding", embedder_->descriptor());
    }
    return *embedder_;
  }

  backends::TaggerBackend& tagger() {
    if (!tagger_) {
      tagger_ = make_tagger(config_.backends.contains("tagger") ? config_.backend_spec("tagger")
                                                                : json{{"type", "lexicon"}});
      note_descriptor("tagger", tagger_->descriptor());
    }
    return *tagger_;
  }

  backends::QuestionClassifier& classifier() {
    if (!classifier_) {
      classifier_ = make_classifier(config_.backends.contains("classifier") ? config_.backend_spec("classifier")
                                                                            : json{{"type", "rules"}});
      note_descriptor("classifier", classifier_->descriptor());
    }
    return *classifier_;
  }

  backends::SpanPredictorBackend& span_predictor() {
    if (!span_) {
      span_ = make_span(config_.backends.contains("span_prediction") ? config_.backend_spec("span_prediction")
                                                                     : json{{"type", "whole_sentence"}});
      note_descriptor("span_prediction", span_->descriptor());
    }
    return *span_;
  }

  // run_id covers everything that determines the outputs: the command and
  // its arguments, the config after overrides, the dataset and every input
  // file. It carries no timestamp.
  std::string run_id() const {
    json identity = {{"command", command_},
                     {"args", args_},
                     {"config", config_.raw},
                     {"dataset_fingerprint", dataset_fingerprint_},
                     {"inputs", inputs_},
                     {"tool_version", kToolVersion}};
    return util::sha256_hex(backends::canonical_json(identity));
  }

  json manifest(const std::vector<std::string>& outputs) const {
    json desc = json::object();
    for (const auto& [role, d] : descriptors_) desc[role] = d;
    return {{"run_id", run_id()},
            {"tool_version", kToolVersion},
            {"format", kOutputFormat},
            {"command", command_},
            {"args", args_},
            {"config", config_.raw},
            {"dataset_fingerprint", dataset_fingerprint_.empty() ? json(nullptr) : json(dataset_fingerprint_)},
            {"inputs", inputs_},
            {"backends", desc},
            {"seed", config_.seed},
            {"tokenizer", corpus::tokenizer_fingerprint()},
            {"outputs", outputs}};
  }

  // Writes {"manifest": ..., <key>: payload} under the output directory and
  // returns the workspace-relative name. Bytes depend only on the content.
  std::string write_output(const std::string& name, const std::string& key, const json& payload) const {
    fs::path path = config_.output_path(name);
    fs::create_directories(path.parent_path());
    std::string rel = (fs::path(config_.output_dir) / name).generic_string();
    json doc = {{"manifest", manifest({rel})}, {key, payload}};
    fs::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw ConfigError("cannot write '" + path.string() + "'");
      f << doc.dump(2) << "\n";
    }
    fs::rename(tmp, path);
    return rel;
  }

 private:
  void note_descriptor(const std::string& role, const backends::BackendDescriptor& d) {
    descriptors_[role] = d.to_json();
  }

  static std::optional<int> context_limit(const json& spec) {
    if (!spec.contains("context_limit") || spec["context_limit"].is_null()) return std::nullopt;
    int limit = spec["context_limit"].get<int>();
    if (limit <= 0) throw ConfigError("context_limit must be positive");
    return limit;
  }

  static backends::MockFallback parse_fallback(const std::string& s) {
    if (s == "error") return backends::MockFallback::error;
    if (s == "fixed") return backends::MockFallback::fixed;
    if (s == "echo") return backends::MockFallback::echo;
    throw ConfigError("mock fallback must be error, fixed or echo; got '" + s + "'");
  }

  // A script is inline JSON or a path to a JSON file.
  json script_of(const json& spec, const char* what) {
    if (!spec.contains("script")) return json::object();
    const json& s = spec["script"];
    if (s.is_string()) return input_json(s.get<std::string>(), what);
    if (s.is_object()) return s;
    throw ConfigError(std::string(what) + ": script must be an object or a path");
  }

  std::shared_ptr<backends::Transport> remote_transport(const json& spec, const std::string& role) {
    if (!spec.contains("url") || !spec["url"].is_string()) throw ConfigError(role + ": remote backend needs 'url'");
    return std::make_shared<backends::RemoteTransport>(spec["url"].get<std::string>(),
                                                       spec.value("credentials_env", std::string()),
                                                       spec.value("timeout_seconds", 60),
                                                       spec.value("body", json::object()));
  }

  static json remote_params(const json& spec) {
    return {{"type", "remote"}, {"body", spec.value("body", json::object())}};
  }

  std::unique_ptr<backends::GenerationBackend> make_generator(const json& spec, const std::string& role) {
    std::string type = spec.value("type", "");
    if (type == "mock") {
      json script = script_of(spec, "mock script");
      auto mock = backends::scripted_mock(script.value("by_fingerprint", std::map<std::string, std::string>{}),
                                          parse_fallback(spec.value("fallback", script.value("fallback", "error"))),
                                          spec.value("fixed_text", script.value("fixed_text", std::string())));
      for (const auto& [prompt, text] : script.value("by_prompt", std::map<std::string, std::string>{})) {
        mock->on_prompt(prompt, text);
      }
      return backends::make_mock_backend(mock, config_.gateway_options(), context_limit(spec));
    }
    if (type == "remote") {
      auto desc = backends::BackendDescriptor::make(backends::BackendKind::generation, spec["url"].get<std::string>(),
                                                    remote_params(spec));
      return std::make_unique<backends::GenerationBackend>(desc, remote_transport(spec, role),
                                                           config_.gateway_options(), context_limit(spec));
    }
    throw ConfigError(role + ": generation backend type must be mock or remote; got '" + type + "'");
  }

  std::unique_ptr<backends::EmbeddingBackend> make_embedder(const json& spec) {
    std::string type = spec.value("type", "");
    double baseline = spec.value("baseline", 0.0);
    if (type == "hash") return std::make_unique<backends::HashEmbedder>(spec.value("dim", 64), baseline);
    if (type == "table") {
      json table = script_of(spec, "embedding table");
      return std::make_unique<backends::TableEmbedder>(table.get<std::map<std::string, backends::Vector>>(),
                                                       baseline);
    }
    if (type == "remote") {
      auto desc = backends::BackendDescriptor::make(backends::BackendKind::embedding, spec["url"].get<std::string>(),
                                                    remote_params(spec));
      return std::make_unique<backends::GatewayEmbedder>(desc, remote_transport(spec, "embedding"), baseline,
                                                         config_.gateway_options());
    }
    throw ConfigError("embedding: backend type must be hash, table or remote; got '" + type + "'");
  }

  std::unique_ptr<backends::TaggerBackend> make_tagger(const json& spec) {
    std::string type = spec.value("type", "");
    if (type != "lexicon") throw ConfigError("tagger: backend type must be lexicon; got '" + type + "'");
    if (spec.contains("lexicon")) {
      return std::make_unique<backends::LexiconTagger>(
          backends::LexiconTagger::from_tsv(input_path(spec["lexicon"].get<std::string>(), "tagger lexicon")));
    }
    return std::make_unique<backends::LexiconTagger>();
  }

  std::unique_ptr<backends::QuestionClassifier> make_classifier(const json& spec) {
    std::string type = spec.value("type", "");
    if (type == "rules") return std::make_unique<backends::RuleBasedQuestionClassifier>();
    if (type == "scripted") {
      json script = script_of(spec, "classifier script");
      return std::make_unique<backends::ScriptedClassifier>(script.get<std::map<std::string, std::string>>(),
                                                            spec.value("fallback", std::string()));
    }
    throw ConfigError("classifier: backend type must be rules or scripted; got '" + type + "'");
  }

  std::unique_ptr<backends::SpanPredictorBackend> make_span(const json& spec) {
    std::string type = spec.value("type", "");
    if (type == "whole_sentence") return std::make_unique<backends::WholeSentencePredictor>();
    if (type == "scripted") {
      std::map<std::string, backends::RawSpan> table;
      for (const auto& [k, v] : script_of(spec, "span script").items()) {
        if (!v.is_array() || v.size() != 2) throw ConfigError("span script entries must be [start, end]");
        table[k] = {v[0].get<int>(), v[1].get<int>()};
      }
      return std::make_unique<backends::ScriptedSpanPredictor>(std::move(table));
    }
    if (type == "remote") {
      auto desc = backends::BackendDescriptor::make(backends::BackendKind::span, spec["url"].get<std::string>(),
                                                    remote_params(spec));
      return std::make_unique<backends::GatewaySpanPredictor>(desc, remote_transport(spec, "span_prediction"),
                                                              config_.gateway_options());
    }
    throw ConfigError("span_prediction: backend type must be whole_sentence, scripted or remote; got '" + type + "'");
  }

  Config config_;
  std::string command_;
  json args_;
  std::unique_ptr<corpus::Dataset> dataset_;
  std::string dataset_fingerprint_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, json> descriptors_;
  std::optional<questiongen::DelimiterMap> delimiters_;
  std::map<std::string, std::unique_ptr<backends::GenerationBackend>> generators_;
  std::unique_ptr<backends::EmbeddingBackend> embedder_;
  std::unique_ptr<backends::TaggerBackend> tagger_;
  std::unique_ptr<backends::QuestionClassifier> classifier_;
  std::unique_ptr<backends::SpanPredictorBackend> span_;
};

}  // namespace elabqud::pipeline
