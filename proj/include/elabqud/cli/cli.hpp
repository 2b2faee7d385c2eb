#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
// Exit codes: 0 success, 1 usage or config, 2 data integrity, 3 backend.

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elabqud/pipeline/runs.hpp"

namespace elabqud::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

inline std::string known_names() {
  return "QG configs: " + questiongen::qg_config_names() + "; elaboration conditions: " + elabgen::condition_names();
}

// Starts the HTTP service; supplied by the binary so the pipeline-only test
// build does not need to link it.
using ServeFn = std::function<int(pipeline::RunContext&, const std::string& host, int port, std::ostream& out)>;

inline int map_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

inline int run(std::vector<std::string> argv, std::ostream& out, std::ostream& err, ServeFn serve = {}) {
  CLI::App app{"Elaboration QUD pipeline: corpus analysis, question and elaboration generation, evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  pipeline::Overrides ov;
  std::string workspace, dataset, output_dir, cache_dir;
  std::uint64_t seed = 0;
  int max_in_flight = 0;
  std::vector<std::string> splits;
  app.add_option("-c,--config", config_path, "JSON config file")->required();
  auto* o_ws = app.add_option("--workspace", workspace, "workspace root (default: the config file's directory)");
  auto* o_ds = app.add_option("--dataset", dataset, "dataset path, relative to the workspace");
  auto* o_out = app.add_option("--output-dir", output_dir, "output directory, relative to the workspace");
  auto* o_cache = app.add_option("--cache-dir", cache_dir, "response cache directory, relative to the workspace");
  auto* o_seed = app.add_option("--seed", seed, "seed for sampled baselines and randomized orders");
  auto* o_mif = app.add_option("--max-in-flight", max_in_flight, "maximum concurrent backend requests")
                    ->check(CLI::PositiveNumber);
  auto* o_splits = app.add_option("--splits", splits, "restrict generation and evaluation to these splits");

  auto* ingest = app.add_subcommand("ingest", "validate and fingerprint the dataset");
  auto* analyze = app.add_subcommand("analyze", "emit the corpus analysis reports");

  std::string qg_name;
  auto* genq = app.add_subcommand("gen-questions", "generate questions with one QG configuration");
  genq->add_option("--qg-config", qg_name, "QG configuration: " + questiongen::qg_config_names())->required();

  std::string condition, questions_file, elab_output;
  auto* gene = app.add_subcommand("gen-elabs", "generate elaborations under one prompt condition");
  gene->add_option("--condition", condition, "prompt condition: " + elabgen::condition_names())->required();
  auto* o_q = gene->add_option("--questions", questions_file, "question records (qud condition)");
  gene->add_option("--output", elab_output, "output file name inside the output directory");

  std::vector<std::string> record_files;
  auto* eval = app.add_subcommand("evaluate", "score generation records against gold references");
  eval->add_option("records", record_files, "record files (default: all in the output directory)");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "start the annotation and evaluation service");
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "port")->check(CLI::Range(0, 65535));

  std::vector<const char*> cargv{"elabqud"};
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  // Names are checked before the config is read, so a typo is a usage error
  // even when the config itself is broken.
  if (*genq) {
    try {
      questiongen::find_qg_config(qg_name);
    } catch (const ConfigError&) {
      err << "error: unknown QG config '" << qg_name << "'. " << known_names() << "\n";
      return kUsage;
    }
  }
  if (*gene) {
    try {
      elabgen::parse_condition(condition);
    } catch (const ConfigError&) {
      err << "error: unknown condition '" << condition << "'. " << known_names() << "\n";
      return kUsage;
    }
  }

  if (*o_ws) ov.workspace = workspace;
  if (*o_ds) ov.dataset = dataset;
  if (*o_out) ov.output_dir = output_dir;
  if (*o_cache) ov.cache_dir = cache_dir;
  if (*o_seed) ov.seed = seed;
  if (*o_mif) ov.max_in_flight = max_in_flight;
  if (*o_splits) ov.splits = splits;

  try {
    auto config = pipeline::load_config(config_path, ov);
    pipeline::RunResult result;
    if (*ingest) {
      pipeline::RunContext ctx(config, "ingest", json::object());
      result = pipeline::run_ingest(ctx);
    } else if (*analyze) {
      pipeline::RunContext ctx(config, "analyze", json::object());
      result = pipeline::run_analyze(ctx);
    } else if (*genq) {
      pipeline::RunContext ctx(config, "gen-questions", {{"qg_config", qg_name}});
      result = pipeline::run_gen_questions(ctx, qg_name);
    } else if (*gene) {
      json args = {{"condition", condition}};
      std::optional<std::string> qpath;
      if (*o_q) {
        qpath = questions_file;
        args["questions"] = questions_file;
      }
      std::optional<std::string> name;
      if (!elab_output.empty()) {
        name = elab_output;
        args["output"] = elab_output;
      }
      pipeline::RunContext ctx(config, "gen-elabs", args);
      result = pipeline::run_gen_elabs(ctx, elabgen::parse_condition(condition), qpath, name);
    } else if (*eval) {
      pipeline::RunContext ctx(config, "evaluate", {{"records", record_files}});
      result = pipeline::run_evaluate(ctx, record_files);
    } else if (*serve_cmd) {
      if (!serve) {
        err << "error: this build has no service\n";
        return kUsage;
      }
      pipeline::RunContext ctx(config, "serve", {{"host", host}, {"port", port}});
      return serve(ctx, host, port, out);
    }
    out << json{{"output", result.output}}.dump() << "\n";
    return kOk;
  } catch (...) {
    return map_exception(err);
  }
}

}  // namespace elabqud::cli
