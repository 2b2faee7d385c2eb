#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "elabqud/errors.hpp"
#include "elabqud/util/hash.hpp"
#include "json.hpp"

namespace elabqud::backends {

using nlohmann::json;

enum class BackendKind { generation, embedding, span, classifier, tagger };

inline std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::generation: return "generation";
    case BackendKind::embedding: return "embedding";
    case BackendKind::span: return "span";
    case BackendKind::classifier: return "classifier";
    case BackendKind::tagger: return "tagger";
  }
  return "generation";
}

inline BackendKind parse_kind(std::string_view s) {
  if (s == "generation") return BackendKind::generation;
  if (s == "embedding") return BackendKind::embedding;
  if (s == "span") return BackendKind::span;
  if (s == "classifier") return BackendKind::classifier;
  if (s == "tagger") return BackendKind::tagger;
  throw ConfigError("unknown backend kind '" + std::string(s) + "'");
}

// Sorted-key compact JSON; the form every hash in the backend layer is taken over.
inline std::string canonical_json(const json& j) { return j.dump(); }

struct BackendDescriptor {
  std::string backend_id;
  BackendKind kind = BackendKind::generation;
  std::optional<std::string> endpoint;
  json params = json::object();

  // backend_id is derived from everything else, so it changes whenever the
  // endpoint or params do and is stable across processes.
  static BackendDescriptor make(BackendKind kind, std::optional<std::string> endpoint, json params) {
    if (params.is_null()) params = json::object();
    json identity = {{"kind", std::string(to_string(kind))},
                     {"endpoint", endpoint ? json(*endpoint) : json(nullptr)},
                     {"params", params}};
    BackendDescriptor d;
    d.backend_id = std::string(to_string(kind)) + "-" + util::sha256_hex(canonical_json(identity)).substr(0, 16);
    d.kind = kind;
    d.endpoint = std::move(endpoint);
    d.params = std::move(params);
    return d;
  }

  json to_json() const {
    return {{"backend_id", backend_id},
            {"kind", std::string(to_string(kind))},
            {"endpoint", endpoint ? json(*endpoint) : json(nullptr)},
            {"params", params}};
  }
};

}  // namespace elabqud::backends
