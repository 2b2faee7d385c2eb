#pragma once

#include <cstdlib>
#include <ostream>
#include <string>

#include "elabqud/pipeline/context.hpp"
#include "elabqud/service/api.hpp"

namespace elabqud::service {

// Service settings from the "service" section of a run config.
inline ServiceConfig service_config(const pipeline::Config& c) {
  ServiceConfig s;
  json j = c.raw.value("service", json::object());
  s.redundancy = j.value("redundancy", s.redundancy);
  if (s.redundancy < 1) throw ConfigError("service.redundancy must be at least 1");
  s.guardrail_overlap = c.guardrail_overlap;
  s.seed = c.seed;
  s.pre_window = c.pre_window;
  s.post_window = c.post_window;
  s.overlap_policy = c.overlap_policy;
  std::string env = j.value("admin_token_env", std::string("ELABQUD_ADMIN_TOKEN"));
  const char* token = std::getenv(env.c_str());
  if (token == nullptr || std::string(token).size() < 16) {
    throw ConfigError("set " + env + " to an admin token of at least 16 characters");
  }
  s.admin_token = token;
  return s;
}

inline std::string store_path(const pipeline::Config& c) {
  json j = c.raw.value("service", json::object());
  return c.resolve(j.value("db", std::string("service.sqlite"))).string();
}

inline int serve(pipeline::RunContext& ctx, const std::string& host, int port, std::ostream& out) {
  const auto& cfg = ctx.config();
  ServiceConfig sc = service_config(cfg);
  auto path = store_path(cfg);
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  Store store(path);
  Service svc(ctx.dataset(), store, sc, ctx.tagger(), ctx.classifier());
  httplib::Server server;
  svc.mount(server);
  int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  out << json{{"listening", host + ":" + std::to_string(bound)}, {"store", path},
              {"config_fingerprint", svc.config_fingerprint()}}.dump()
      << std::endl;
  server.listen_after_bind();
  return 0;
}

}  // namespace elabqud::service
