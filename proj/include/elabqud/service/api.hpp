#pragma once

// JSON-over-HTTP API for annotation and human evaluation. Requests are routed
// by `handle`, which is independent of the HTTP server so it can be tested
// directly; `mount` attaches it to an httplib server.

#include <openssl/rand.h>

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "elabqud/analysis/agreement.hpp"
#include "elabqud/analysis/questions.hpp"
#include "elabqud/analysis/targets.hpp"
#include "elabqud/backends/classifier.hpp"
#include "elabqud/backends/tagger.hpp"
#include "elabqud/corpus/dataset.hpp"
#include "elabqud/corpus/window.hpp"
#include "elabqud/metrics/human_eval.hpp"
#include "elabqud/service/guardrail.hpp"
#include "elabqud/service/store.hpp"
#include "elabqud/util/random.hpp"
#include "httplib.h"

namespace elabqud::service {

struct ServiceConfig {
  int redundancy = 2;
  double guardrail_overlap = 0.5;
  std::uint64_t seed = 0;
  int pre_window = corpus::kPreWindow;
  int post_window = corpus::kPostWindow;
  analysis::OverlapPolicy overlap_policy = analysis::OverlapPolicy::any_token;
  std::string admin_token;  // never part of the fingerprint

  json to_json() const {
    return {{"redundancy", redundancy},
            {"guardrail_overlap", guardrail_overlap},
            {"seed", seed},
            {"window", {{"pre", pre_window}, {"post", post_window}}},
            {"overlap_policy", overlap_policy == analysis::OverlapPolicy::any_token ? "any_token" : "identical_span"}};
  }
};

struct Response {
  int status = 200;
  json body;  // null with status 204

  static Response ok(json body) { return {200, std::move(body)}; }
  static Response created(json body) { return {201, std::move(body)}; }
  static Response no_content() { return {204, nullptr}; }
};

struct FieldError {
  std::string field;
  std::string code;
  std::string message;
};

inline Response error_response(int status, const std::string& code, const std::string& message,
                               const std::vector<FieldError>& fields = {}) {
  json f = json::array();
  for (const auto& e : fields) f.push_back({{"field", e.field}, {"code", e.code}, {"message", e.message}});
  return {status, {{"error", {{"code", code}, {"message", message}, {"fields", f}}}}};
}

inline std::string random_token() {
  unsigned char bytes[24];
  if (RAND_bytes(bytes, sizeof bytes) != 1) throw Error("cannot draw a random token");
  return util::to_hex(bytes, sizeof bytes);
}

// Per-(judge, item) presentation order under the service seed.
inline std::uint64_t order_seed(std::uint64_t seed, const std::string& judge_id, const std::string& item_id) {
  return util::sha256_u64(std::to_string(seed) + "|" + judge_id + "|" + item_id);
}

inline std::string candidate_id(const std::string& item_id, const std::string& system) {
  return "c" + util::sha256_hex(item_id + "|" + system).substr(0, 10);
}

class Service {
 public:
  // `corpus` supplies documents and instances; any annotations it carries are
  // ignored, since annotations come from the store.
  Service(const corpus::Dataset& corpus, Store& store, ServiceConfig config, backends::TaggerBackend& tagger,
          backends::QuestionClassifier& classifier)
      : corpus_(corpus), store_(store), config_(std::move(config)), tagger_(tagger), classifier_(classifier) {
    for (const auto& i : corpus_.instances()) instance_order_.push_back(i.instance_id);
    fingerprint_ = util::sha256_hex(backends::canonical_json({{"service", config_.to_json()},
                                                               {"dataset", corpus::dataset_fingerprint(corpus_)},
                                                               {"tagger", tagger_.descriptor().backend_id},
                                                               {"classifier", classifier_.descriptor().backend_id}}));
  }

  const std::string& config_fingerprint() const { return fingerprint_; }

  Response handle(const std::string& method, const std::string& path, const std::string& authorization,
                  const std::string& body) {
    try {
      return route(method, split_path(path), bearer(authorization), body);
    } catch (const json::exception& e) {
      return error_response(400, "bad_request", std::string("malformed JSON: ") + e.what());
    } catch (const sql::ConstraintError& e) {
      return error_response(409, "conflict", e.what());
    } catch (const ValidationError& e) {
      return error_response(422, "invalid", e.what());
    } catch (const IntegrityError& e) {
      return error_response(422, "invalid", e.what());
    } catch (const std::exception& e) {
      return error_response(500, "internal", e.what());
    }
  }

  void mount(httplib::Server& server) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      auto r = handle(req.method, req.path, req.get_header_value("Authorization"), req.body);
      res.status = r.status;
      if (r.status != 204) res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
  }

  // ---- reports; also used directly by tests ----

  corpus::Dataset approved_dataset() {
    corpus::Dataset ds(corpus_.format_version());
    for (const auto& d : corpus_.documents()) ds.add_document(d);
    for (const auto& i : corpus_.instances()) ds.add_instance(i.instance_id, i.doc_id, i.elab_index, i.split);
    for (const auto& s : store_.annotations(true, false)) ds.add_annotation(s.annotation);
    return ds;
  }

  json report(const std::string& name) {
    json data;
    try {
      data = report_data(name);
    } catch (const EmptyInputError& e) {
      return {{"report", name}, {"config_fingerprint", fingerprint_}, {"empty", true}, {"reason", e.what()}};
    } catch (const StatisticsError& e) {
      return {{"report", name}, {"config_fingerprint", fingerprint_}, {"empty", true}, {"reason", e.what()}};
    }
    return {{"report", name}, {"config_fingerprint", fingerprint_}, {"empty", false}, {"data", data}};
  }

  static const std::vector<std::string>& report_names() {
    static const std::vector<std::string> names = {"agreement", "targets", "qtypes", "rankings", "judgments"};
    return names;
  }

 private:
  struct Caller {
    std::optional<User> user;
    bool admin = false;
  };

  static std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path.substr(0, path.find('?'))) {
      if (c == '/') {
        if (!cur.empty()) parts.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
  }

  Caller bearer(const std::string& header) {
    static const std::string prefix = "Bearer ";
    Caller c;
    if (header.compare(0, prefix.size(), prefix) != 0) return c;
    std::string token = header.substr(prefix.size());
    if (token.empty()) return c;
    if (!config_.admin_token.empty() && token == config_.admin_token) {
      c.admin = true;
      return c;
    }
    c.user = store_.user_by_token(token);
    return c;
  }

  static json parse_body(const std::string& body) {
    json j = body.empty() ? json::object() : json::parse(body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  }

  Response route(const std::string& method, const std::vector<std::string>& p, const Caller& caller,
                 const std::string& body) {
    auto is = [&](const std::string& m, std::initializer_list<const char*> parts) {
      if (m != method || p.size() != parts.size()) return false;
      std::size_t i = 0;
      for (const char* s : parts) {
        if (*s != '*' && p[i] != s) return false;
        ++i;
      }
      return true;
    };
    if (is("GET", {"healthz"})) return Response::ok({{"status", "ok"}, {"config_fingerprint", fingerprint_}});
    if (!caller.admin && !caller.user) return error_response(401, "unauthorized", "missing or unknown bearer token");

    if (p.size() >= 1 && p[0] == "admin") {
      if (!caller.admin) return error_response(403, "forbidden", "admin token required");
      json j = method == "POST" ? parse_body(body) : json::object();
      if (is("POST", {"admin", "users"})) return admin_add_user(j);
      if (is("POST", {"admin", "qualifications"})) return admin_set_qualification(j);
      if (is("POST", {"admin", "qualifications", "*", "decision"})) return admin_decide(p[2], j);
      if (is("GET", {"admin", "qualifications", "*"})) return admin_get_qualification(p[2]);
      if (is("POST", {"admin", "redundancy"})) return admin_redundancy(j);
      if (is("POST", {"admin", "tasks", "*", "approve"})) return admin_approve(p[2]);
      if (is("POST", {"admin", "eval-items"})) return admin_add_item(j);
      return error_response(404, "not_found", "no such admin endpoint");
    }

    if (is("GET", {"instances", "*"})) return get_instance(p[1]);
    if (is("GET", {"reports", "*"})) {
      const auto& names = report_names();
      if (std::find(names.begin(), names.end(), p[1]) == names.end()) {
        return error_response(404, "not_found", "unknown report '" + p[1] + "'");
      }
      return Response::ok(report(p[1]));
    }
    if (caller.admin) return error_response(403, "forbidden", "this endpoint needs an annotator or judge token");
    const User& user = *caller.user;
    if (is("POST", {"tasks", "next"})) return next_task(user);
    if (is("POST", {"qualification", "next"})) return next_qualification(user);
    if (is("GET", {"tasks", "*"})) return get_task(user, p[1]);
    if (is("POST", {"annotations"})) return post_annotation(user, parse_body(body));
    if (is("GET", {"eval-items", "*"})) return get_eval_item(user, p[1]);
    if (is("POST", {"judgments"})) return post_judgment(user, parse_body(body));
    if (is("POST", {"rankings"})) return post_ranking(user, parse_body(body));
    return error_response(404, "not_found", "no such endpoint");
  }

  // ---- payloads ----

  static json sentence_json(const corpus::Sentence& s) {
    return {{"index", s.index}, {"text", s.text}, {"tokens", corpus::tokenize(s.text)}};
  }

  // `context` carries only sentences before the elaboration, so clients in the
  // question-writing phase can rely on it never containing E.
  json instance_payload(const corpus::ElaborationInstance& inst) const {
    const auto& doc = corpus_.document(inst.doc_id);
    auto w = corpus::extract_window(doc, inst.elab_index, config_.pre_window, config_.post_window);
    json context = json::array();
    for (const auto& s : w.pre) {
      json j = sentence_json(s);
      j["is_previous"] = s.index == inst.elab_index - 1;
      context.push_back(j);
    }
    json elab = sentence_json(w.elaboration);
    elab["highlighted"] = true;
    json post = json::array();
    for (const auto& s : w.post) post.push_back(sentence_json(s));
    return {{"instance_id", inst.instance_id},
            {"doc_id", inst.doc_id},
            {"elab_index", inst.elab_index},
            {"context", context},
            {"elaboration", elab},
            {"post", post}};
  }

  json task_json(const Task& t) const {
    return {{"task_id", t.task_id},
            {"kind", t.kind},
            {"instance_id", t.instance_id},
            {"assigned_to", t.assigned_to},
            {"state", t.state},
            {"payload", instance_payload(corpus_.instance(t.instance_id))}};
  }

  // ---- annotator endpoints ----

  Response next_task(const User& user) {
    if (user.role != Role::annotator) return error_response(403, "forbidden", "annotator token required");
    auto q = store_.qualification(user.user_id);
    if (!q || q->status != "passed") {
      return error_response(403, "not_qualified", "annotator '" + user.user_id + "' has not passed qualification");
    }
    auto t = store_.next_annotation_task(user.user_id, instance_order_, config_.redundancy);
    if (!t) return Response::no_content();
    return Response::ok(task_json(*t));
  }

  Response next_qualification(const User& user) {
    if (user.role != Role::annotator) return error_response(403, "forbidden", "annotator token required");
    auto q = store_.qualification(user.user_id);
    if (!q) return error_response(403, "not_enrolled", "no qualification set for '" + user.user_id + "'");
    if (q->status != "pending") return Response::no_content();
    auto t = store_.next_qualification_task(user.user_id);
    if (!t) return Response::no_content();
    return Response::ok(task_json(*t));
  }

  Response get_task(const User& user, const std::string& task_id) {
    auto t = store_.task(task_id);
    if (!t || t->assigned_to != user.user_id) return error_response(404, "not_found", "no such task");
    return Response::ok(task_json(*t));
  }

  Response get_instance(const std::string& id) {
    if (!corpus_.has_instance(id)) return error_response(404, "not_found", "unknown instance '" + id + "'");
    return Response::ok(instance_payload(corpus_.instance(id)));
  }

  template <class T>
  static std::optional<T> field_as(const json& j, const char* name, std::vector<FieldError>& errors, bool required) {
    if (!j.contains(name) || j[name].is_null()) {
      if (required) errors.push_back({name, "required", std::string(name) + " is required"});
      return std::nullopt;
    }
    try {
      return j[name].get<T>();
    } catch (const json::exception&) {
      errors.push_back({name, "type", std::string(name) + " has the wrong type"});
      return std::nullopt;
    }
  }

  Response post_annotation(const User& user, const json& j) {
    std::vector<FieldError> errors;
    auto task_id = field_as<std::string>(j, "task_id", errors, true);
    if (!task_id) return error_response(422, "invalid", "annotation rejected", errors);
    auto task = store_.task(*task_id);
    if (!task || task->assigned_to != user.user_id) {
      return error_response(403, "not_assigned", "task is not assigned to '" + user.user_id + "'");
    }
    if (task->state != "open") return error_response(409, "task_closed", "task is " + task->state);

    const auto& inst = corpus_.instance(task->instance_id);
    const auto& doc = corpus_.document(inst.doc_id);
    bool organizational = field_as<bool>(j, "is_organizational", errors, false).value_or(false);
    std::string question = field_as<std::string>(j, "question", errors, false).value_or("");
    auto anchor = field_as<int>(j, "anchor_index", errors, !organizational);
    std::optional<corpus::TargetSpan> target;

    if (!organizational && corpus::is_blank(question)) {
      errors.push_back({"question", "required", "a question is required unless the sentence is organizational"});
    }
    if (anchor && (*anchor < 0 || *anchor >= inst.elab_index)) {
      errors.push_back({"anchor_index", "out_of_context", "anchor must be a sentence before the elaboration"});
      anchor.reset();
    }
    if (j.contains("target") && !j["target"].is_null()) {
      const json& t = j["target"];
      auto si = field_as<int>(t, "sentence_index", errors, true);
      auto st = field_as<int>(t, "start_token", errors, true);
      auto en = field_as<int>(t, "end_token", errors, true);
      if (si && st && en) {
        if (*si < 0 || *si >= inst.elab_index) {
          errors.push_back({"target.sentence_index", "out_of_context", "target must lie before the elaboration"});
        } else if (anchor && *si != *anchor) {
          errors.push_back({"target.sentence_index", "not_in_anchor", "target must lie in the anchor sentence"});
        } else {
          int n = static_cast<int>(corpus::tokenize(doc.at(*si).text).size());
          if (*st < 0) errors.push_back({"target.start_token", "out_of_range", "start_token must be >= 0"});
          if (*en > n) {
            errors.push_back({"target.end_token", "out_of_range",
                              "end_token exceeds the sentence length of " + std::to_string(n) + " tokens"});
          }
          if (*st >= *en) errors.push_back({"target.end_token", "empty_span", "end_token must exceed start_token"});
          if (*st >= 0 && *en <= n && *st < *en) target = corpus::make_span(doc.at(*si), *st, *en);
        }
      }
    } else if (!organizational) {
      errors.push_back({"target", "required", "a target span is required unless the sentence is organizational"});
    }
    if (!corpus::is_blank(question)) {
      double overlap = content_overlap(question, doc.at(inst.elab_index).text);
      if (overlap >= config_.guardrail_overlap) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f", overlap);
        errors.push_back({"question", "elaboration_overlap",
                          std::string("question shares ") + buf + " of its content words with the elaboration"});
      }
    }
    if (!errors.empty()) return error_response(422, "invalid", "annotation rejected", errors);

    corpus::QUDAnnotation a;
    a.instance_id = inst.instance_id;
    a.annotator_id = user.user_id;
    a.question = question;
    a.target = target;
    a.anchor_index = anchor ? *anchor : (target ? target->sentence_index : inst.elab_index - 1);
    if (a.anchor_index < 0) a.anchor_index = inst.elab_index;
    a.is_organizational = organizational;
    if (!store_.submit_annotation(*task, a)) return error_response(409, "task_closed", "task is no longer open");
    return Response::created({{"task_id", task->task_id}, {"state", "submitted"}});
  }

  // ---- judge endpoints ----

  Response get_eval_item(const User& user, const std::string& item_id) {
    if (user.role != Role::judge) return error_response(403, "forbidden", "judge token required");
    auto item = store_.eval_item(item_id);
    if (!item || !store_.assigned(item_id, user.user_id)) return error_response(404, "not_found", "no such item");
    const auto& inst = corpus_.instance(item->instance_id);
    json p = instance_payload(inst);
    json out = {{"item_id", item->item_id}, {"kind", item->kind}, {"context", p["context"]}};
    if (item->kind == "question") {
      out["elaboration"] = p["elaboration"];
      out["question"] = item->payload["question"];
      out["criteria"] = {"reasonable", "answered"};
    } else {
      std::vector<json> cands;
      for (const auto& c : item->payload["candidates"]) {
        cands.push_back({{"candidate_id", candidate_id(item_id, c["system"].get<std::string>())}, {"text", c["text"]}});
      }
      std::mt19937_64 rng(order_seed(config_.seed, user.user_id, item_id));
      util::shuffle(cands, rng);
      out["candidates"] = cands;
      out["criteria"] = {"elaboration_like", "coherence"};
      out["picks"] = 2;
    }
    return Response::ok(out);
  }

  Response post_judgment(const User& user, const json& j) {
    if (user.role != Role::judge) return error_response(403, "forbidden", "judge token required");
    std::vector<FieldError> errors;
    auto item_id = field_as<std::string>(j, "item_id", errors, true);
    auto reasonable = field_as<bool>(j, "reasonable", errors, true);
    auto answered = field_as<bool>(j, "answered", errors, true);
    if (!errors.empty()) return error_response(422, "invalid", "judgment rejected", errors);
    auto item = store_.eval_item(*item_id);
    if (!item || !store_.assigned(*item_id, user.user_id)) return error_response(404, "not_found", "no such item");
    if (item->kind != "question") {
      return error_response(422, "invalid", "judgment rejected", {{"item_id", "wrong_kind", "item is not a question item"}});
    }
    try {
      auto id = store_.add_judgment(*item_id, user.user_id, *reasonable, *answered);
      return Response::created({{"id", id}});
    } catch (const sql::ConstraintError&) {
      return error_response(409, "duplicate", "judge already submitted for this item");
    }
  }

  Response post_ranking(const User& user, const json& j) {
    if (user.role != Role::judge) return error_response(403, "forbidden", "judge token required");
    std::vector<FieldError> errors;
    auto item_id = field_as<std::string>(j, "item_id", errors, true);
    auto criterion_s = field_as<std::string>(j, "criterion", errors, true);
    auto first = field_as<std::string>(j, "first", errors, true);
    auto second = field_as<std::string>(j, "second", errors, true);
    std::optional<metrics::RankCriterion> criterion;
    if (criterion_s) {
      try {
        criterion = metrics::parse_criterion(*criterion_s);
      } catch (const Error&) {
        errors.push_back({"criterion", "unknown", "criterion must be elaboration_like or coherence"});
      }
    }
    if (first && second && *first == *second) {
      errors.push_back({"second", "duplicate_pick", "first and second must be different outputs"});
    }
    if (!errors.empty()) return error_response(422, "invalid", "ranking rejected", errors);
    auto item = store_.eval_item(*item_id);
    if (!item || !store_.assigned(*item_id, user.user_id)) return error_response(404, "not_found", "no such item");
    if (item->kind != "ranking") {
      return error_response(422, "invalid", "ranking rejected", {{"item_id", "wrong_kind", "item is not a ranking item"}});
    }
    auto system_for = [&](const std::string& cid) -> std::optional<std::string> {
      for (const auto& c : item->payload["candidates"]) {
        auto sys = c["system"].get<std::string>();
        if (candidate_id(*item_id, sys) == cid) return sys;
      }
      return std::nullopt;
    };
    auto fs = system_for(*first), ss = system_for(*second);
    if (!fs) errors.push_back({"first", "unknown_candidate", "no such candidate in this item"});
    if (!ss) errors.push_back({"second", "unknown_candidate", "no such candidate in this item"});
    if (!errors.empty()) return error_response(422, "invalid", "ranking rejected", errors);
    try {
      auto id = store_.add_ranking(*item_id, user.user_id, *criterion, *fs, *ss);
      return Response::created({{"id", id}});
    } catch (const sql::ConstraintError&) {
      return error_response(409, "duplicate", "judge already ranked this item on " + *criterion_s);
    }
  }

  // ---- admin endpoints ----

  Response admin_add_user(const json& j) {
    std::vector<FieldError> errors;
    auto id = field_as<std::string>(j, "user_id", errors, true);
    auto role_s = field_as<std::string>(j, "role", errors, true);
    auto token = field_as<std::string>(j, "token", errors, false);
    std::optional<Role> role = role_s ? parse_role(*role_s) : std::nullopt;
    if (role_s && !role) errors.push_back({"role", "unknown", "role must be annotator or judge"});
    if (id && id->empty()) errors.push_back({"user_id", "required", "user_id must be non-empty"});
    if (token && token->size() < 16) errors.push_back({"token", "too_short", "tokens need at least 16 characters"});
    if (!errors.empty()) return error_response(422, "invalid", "user rejected", errors);
    std::string t = token.value_or(random_token());
    try {
      store_.add_user(*id, *role, t);
    } catch (const sql::ConstraintError&) {
      return error_response(409, "duplicate", "user id or token already registered");
    }
    return Response::created({{"user_id", *id}, {"role", *role_s}, {"token", t}});
  }

  Response admin_set_qualification(const json& j) {
    std::vector<FieldError> errors;
    auto id = field_as<std::string>(j, "annotator_id", errors, true);
    auto set = field_as<std::vector<std::string>>(j, "instance_ids", errors, true);
    if (set) {
      if (set->size() != kQualificationSetSize) {
        errors.push_back({"instance_ids", "wrong_size", "a qualification set has exactly 6 instances"});
      }
      for (const auto& i : *set) {
        if (!corpus_.has_instance(i)) errors.push_back({"instance_ids", "unknown_instance", "unknown instance '" + i + "'"});
      }
      if (std::set<std::string>(set->begin(), set->end()).size() != set->size()) {
        errors.push_back({"instance_ids", "duplicate", "qualification instances must be distinct"});
      }
    }
    if (id) {
      auto u = store_.user(*id);
      if (!u || u->role != Role::annotator) errors.push_back({"annotator_id", "unknown", "no such annotator"});
    }
    if (!errors.empty()) return error_response(422, "invalid", "qualification set rejected", errors);
    store_.set_qualification_set(*id, *set);
    return Response::created(store_.qualification(*id)->to_json());
  }

  Response admin_decide(const std::string& annotator_id, const json& j) {
    std::vector<FieldError> errors;
    auto status = field_as<std::string>(j, "status", errors, true);
    if (status && *status != "passed" && *status != "failed") {
      errors.push_back({"status", "unknown", "status must be passed or failed"});
    }
    if (!errors.empty()) return error_response(422, "invalid", "decision rejected", errors);
    if (!store_.decide_qualification(annotator_id, *status == "passed")) {
      return error_response(404, "not_found", "no qualification record for '" + annotator_id + "'");
    }
    return Response::ok(store_.qualification(annotator_id)->to_json());
  }

  Response admin_get_qualification(const std::string& annotator_id) {
    auto q = store_.qualification(annotator_id);
    if (!q) return error_response(404, "not_found", "no qualification record for '" + annotator_id + "'");
    return Response::ok(q->to_json());
  }

  Response admin_redundancy(const json& j) {
    std::vector<FieldError> errors;
    auto ids = field_as<std::vector<std::string>>(j, "instance_ids", errors, true);
    auto n = field_as<int>(j, "redundancy", errors, true);
    if (n && *n < 1) errors.push_back({"redundancy", "out_of_range", "redundancy must be at least 1"});
    if (ids) {
      for (const auto& i : *ids) {
        if (!corpus_.has_instance(i)) errors.push_back({"instance_ids", "unknown_instance", "unknown instance '" + i + "'"});
      }
    }
    if (!errors.empty()) return error_response(422, "invalid", "redundancy rejected", errors);
    for (const auto& i : *ids) store_.set_redundancy(i, *n);
    return Response::ok({{"updated", ids->size()}, {"redundancy", *n}});
  }

  Response admin_approve(const std::string& task_id) {
    auto t = store_.task(task_id);
    if (!t) return error_response(404, "not_found", "no such task");
    if (!store_.approve(task_id)) return error_response(409, "invalid_transition", "task is " + t->state);
    return Response::ok({{"task_id", task_id}, {"state", "approved"}});
  }

  Response admin_add_item(const json& j) {
    std::vector<FieldError> errors;
    auto id = field_as<std::string>(j, "item_id", errors, true);
    auto kind = field_as<std::string>(j, "kind", errors, true);
    auto instance = field_as<std::string>(j, "instance_id", errors, true);
    auto judges = field_as<std::vector<std::string>>(j, "judges", errors, false).value_or(std::vector<std::string>{});
    if (instance && !corpus_.has_instance(*instance)) {
      errors.push_back({"instance_id", "unknown_instance", "unknown instance '" + *instance + "'"});
    }
    for (const auto& jd : judges) {
      auto u = store_.user(jd);
      if (!u || u->role != Role::judge) errors.push_back({"judges", "unknown", "no such judge '" + jd + "'"});
    }
    json payload;
    if (kind && *kind == "question") {
      auto qid = field_as<std::string>(j, "question_id", errors, true);
      auto sys = field_as<std::string>(j, "system", errors, true);
      auto q = field_as<std::string>(j, "question", errors, true);
      if (qid && sys && q) payload = {{"question_id", *qid}, {"system", *sys}, {"question", *q}};
    } else if (kind && *kind == "ranking") {
      auto cands = field_as<json>(j, "candidates", errors, true);
      if (cands) {
        std::set<std::string> systems, ids;
        bool ok = cands->is_array() && cands->size() >= 2;
        if (ok) {
          for (const auto& c : *cands) {
            if (!c.is_object() || !c.contains("system") || !c.contains("text") || !c["system"].is_string() ||
                !c["text"].is_string()) {
              ok = false;
              break;
            }
            systems.insert(c["system"].get<std::string>());
            if (id) ids.insert(candidate_id(*id, c["system"].get<std::string>()));
          }
        }
        if (!ok) {
          errors.push_back({"candidates", "invalid", "candidates must be at least two {system, text} objects"});
        } else if (systems.size() != cands->size() || (id && ids.size() != cands->size())) {
          errors.push_back({"candidates", "duplicate", "candidate systems must be distinct"});
        } else {
          payload = {{"candidates", *cands}};
        }
      }
    } else if (kind) {
      errors.push_back({"kind", "unknown", "kind must be question or ranking"});
    }
    if (!errors.empty()) return error_response(422, "invalid", "item rejected", errors);
    try {
      store_.add_eval_item({*id, *kind, *instance, payload}, judges);
    } catch (const sql::ConstraintError&) {
      return error_response(409, "duplicate", "item '" + *id + "' already exists");
    }
    return Response::created({{"item_id", *id}});
  }

  json report_data(const std::string& name) {
    if (name == "agreement") return analysis::anchor_agreement(approved_dataset()).to_json();
    if (name == "targets") {
      auto ds = approved_dataset();
      json stats = analysis::target_statistics(ds, tagger_).to_json();
      stats["backend_id"] = tagger_.descriptor().backend_id;
      return {{"statistics", stats}, {"overlap", analysis::target_overlap_rate(ds, config_.overlap_policy).to_json()}};
    }
    if (name == "qtypes") {
      json j = analysis::question_type_distribution(analysis::dataset_questions(approved_dataset()), classifier_).to_json();
      j["backend_id"] = classifier_.descriptor().backend_id;
      return j;
    }
    if (name == "rankings") {
      auto r = store_.rankings();
      if (r.empty()) throw EmptyInputError("no rankings submitted");
      return metrics::tally_rankings(r).to_json();
    }
    auto [judgments, system_of] = store_.judgments();
    if (judgments.empty()) throw EmptyInputError("no judgments submitted");
    return metrics::tally_question_judgments(judgments, system_of).to_json();
  }

  const corpus::Dataset& corpus_;
  Store& store_;
  ServiceConfig config_;
  backends::TaggerBackend& tagger_;
  backends::QuestionClassifier& classifier_;
  std::vector<std::string> instance_order_;
  std::string fingerprint_;
};

}  // namespace elabqud::service
