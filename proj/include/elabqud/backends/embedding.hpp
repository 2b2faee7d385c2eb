#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "elabqud/backends/gateway.hpp"

namespace elabqud::backends {

using Vector = std::vector<double>;

// Token embeddings for similarity scoring. `baseline` is the rescaling
// constant that belongs to the embedding model.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::vector<Vector> embed(const std::vector<std::string>& tokens) = 0;
  virtual double baseline() const = 0;
};

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Non-contextual pseudo-embeddings derived from a hash of the lowercased
// token. Identical tokens match exactly; distinct tokens are near-orthogonal
// for large dimensions. Useful as a deterministic desk-scale backend.
class HashEmbedder : public EmbeddingBackend {
 public:
  explicit HashEmbedder(int dim = 64, double baseline = 0.0)
      : dim_(dim), baseline_(baseline),
        descriptor_(BackendDescriptor::make(BackendKind::embedding, std::nullopt,
                                            {{"type", "hash"}, {"dim", dim}, {"baseline", baseline}})) {
    if (dim <= 0) throw ConfigError("hash embedder: dim must be positive");
    if (baseline >= 1.0) throw ConfigError("rescaling baseline must be < 1");
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  double baseline() const override { return baseline_; }

  std::vector<Vector> embed(const std::vector<std::string>& tokens) override {
    std::vector<Vector> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
      Vector v(static_cast<std::size_t>(dim_));
      std::string w = lowercase(t);
      for (int block = 0; block * 32 < dim_; ++block) {
        auto d = util::sha256(w + "#" + std::to_string(block));
        for (int i = 0; i < 32 && block * 32 + i < dim_; ++i) {
          v[static_cast<std::size_t>(block * 32 + i)] = (static_cast<double>(d[static_cast<std::size_t>(i)]) - 127.5) / 127.5;
        }
      }
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  int dim_;
  double baseline_;
  BackendDescriptor descriptor_;
};

// Fixed token -> vector table; unknown tokens are a backend error.
class TableEmbedder : public EmbeddingBackend {
 public:
  TableEmbedder(std::map<std::string, Vector> table, double baseline)
      : table_(std::move(table)), baseline_(baseline) {
    json t = json::object();
    for (const auto& [k, v] : table_) t[k] = v;
    descriptor_ = BackendDescriptor::make(BackendKind::embedding, std::nullopt,
                                          {{"type", "table"}, {"table_sha256", util::sha256_hex(t.dump())},
                                           {"baseline", baseline}});
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  double baseline() const override { return baseline_; }

  std::vector<Vector> embed(const std::vector<std::string>& tokens) override {
    std::vector<Vector> out;
    for (const auto& t : tokens) {
      auto it = table_.find(t);
      if (it == table_.end()) throw BackendError("table embedder: no vector for token '" + t + "'");
      out.push_back(it->second);
    }
    return out;
  }

 private:
  std::map<std::string, Vector> table_;
  double baseline_;
  BackendDescriptor descriptor_;
};

// Remote embedder: request {"tokens": [...]} -> response {"vectors": [[...], ...]}.
class GatewayEmbedder : public EmbeddingBackend {
 public:
  GatewayEmbedder(BackendDescriptor descriptor, std::shared_ptr<Transport> transport, double baseline,
                  GatewayOptions options = {})
      : gateway_(std::move(descriptor), std::move(transport), std::move(options), validate), baseline_(baseline) {}

  const BackendDescriptor& descriptor() const override { return gateway_.descriptor(); }
  double baseline() const override { return baseline_; }

  std::vector<Vector> embed(const std::vector<std::string>& tokens) override {
    json r = gateway_.call({{"tokens", tokens}});
    auto vectors = r["vectors"].get<std::vector<Vector>>();
    if (vectors.size() != tokens.size()) throw ProtocolError("embedder returned wrong number of vectors");
    return vectors;
  }

 private:
  static void validate(const json& r) {
    if (!r.is_object() || !r.contains("vectors") || !r["vectors"].is_array()) {
      throw ProtocolError("embedding response must contain a 'vectors' array");
    }
    for (const auto& v : r["vectors"]) {
      if (!v.is_array()) throw ProtocolError("embedding vectors must be arrays of numbers");
      for (const auto& x : v) {
        if (!x.is_number()) throw ProtocolError("embedding vectors must be arrays of numbers");
      }
    }
  }

  Gateway gateway_;
  double baseline_;
};

}  // namespace elabqud::backends
