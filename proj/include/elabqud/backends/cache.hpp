#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "elabqud/backends/descriptor.hpp"

namespace elabqud::backends {

struct CacheEntry {
  std::string key;
  json request;
  json response;
  std::string created_at;
};

inline std::string cache_key(std::string_view backend_id, const json& request) {
  std::string material(backend_id);
  material += '\n';
  material += canonical_json(request);
  return util::sha256_hex(material);
}

inline std::string utc_now_iso8601() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Cache {
 public:
  virtual ~Cache() = default;
  virtual std::optional<CacheEntry> get(const std::string& key) = 0;
  virtual void put(const CacheEntry& entry) = 0;
};

class MemoryCache : public Cache {
 public:
  std::optional<CacheEntry> get(const std::string& key) override {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const CacheEntry& entry) override {
    std::lock_guard lock(mu_);
    entries_[entry.key] = entry;
  }

 private:
  std::mutex mu_;
  std::map<std::string, CacheEntry> entries_;
};

// One JSON file per entry, named by the hex key. Writes go through a temp
// file and rename so concurrent readers never see a partial entry.
class FileCache : public Cache {
 public:
  explicit FileCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path path_for(const std::string& key) const { return dir_ / key; }

  std::optional<CacheEntry> get(const std::string& key) override {
    std::ifstream f(path_for(key), std::ios::binary);
    if (!f) return std::nullopt;
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error&) {
      return std::nullopt;
    }
    if (!j.is_object() || j.value("key", "") != key || !j.contains("response")) return std::nullopt;
    return CacheEntry{key, j.value("request", json()), j["response"], j.value("created_at", "")};
  }

  void put(const CacheEntry& e) override {
    json j = {{"key", e.key}, {"request", e.request}, {"response", e.response}, {"created_at", e.created_at}};
    std::ostringstream suffix;
    suffix << ".tmp." << std::this_thread::get_id() << "." << std::random_device{}();
    auto tmp = path_for(e.key);
    tmp += suffix.str();
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw BackendError("cache: cannot write " + tmp.string());
      f << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path_for(e.key));
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace elabqud::backends
