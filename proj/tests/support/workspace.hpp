#pragma once

// Throwaway workspace directories and in-process CLI invocation for tests.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "elabqud/cli/cli.hpp"
#include "json.hpp"

namespace elabqud::synth {

class TempWorkspace {
 public:
  explicit TempWorkspace(const std::string& tag) {
    static std::atomic<int> counter{0};
    root_ = std::filesystem::temp_directory_path() /
            ("elabqud-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(root_);
    std::filesystem::create_directories(root_);
  }
  TempWorkspace(const TempWorkspace&) = delete;
  TempWorkspace& operator=(const TempWorkspace&) = delete;
  ~TempWorkspace() {
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
  }

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& rel) const { return root_ / rel; }

  void write(const std::string& rel, const std::string& content) const {
    auto p = path(rel);
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << content;
  }

  void write_json(const std::string& rel, const nlohmann::json& j) const { write(rel, j.dump(2)); }

  std::string read(const std::string& rel) const {
    std::ifstream f(path(rel), std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  nlohmann::json read_json(const std::string& rel) const { return nlohmann::json::parse(read(rel)); }

  // Every regular file under `rel`, keyed by relative path.
  std::map<std::string, std::string> snapshot(const std::string& rel) const {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(path(rel))) {
      if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root_).generic_string()] = read(
          std::filesystem::relative(e.path(), root_).generic_string());
    }
    return out;
  }

 private:
  std::filesystem::path root_;
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace elabqud::synth
