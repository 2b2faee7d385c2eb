#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "elabqud/service/server.hpp"
#include "support/synthetic.hpp"
#include "support/workspace.hpp"

using namespace elabqud;
using namespace elabqud::service;
using nlohmann::json;
using synth::TempWorkspace;

namespace {

const std::string kAdmin = "admin-token-0123456789";

struct Harness {
  explicit Harness(corpus::Dataset corpus, ServiceConfig cfg = {})
      : ws("svc"), ds(std::move(corpus)), store(ws.path("svc.sqlite").string()),
        svc(ds, store, with_admin(std::move(cfg)), tagger, classifier) {}

  static ServiceConfig with_admin(ServiceConfig c) {
    c.admin_token = kAdmin;
    return c;
  }

  Response call(const std::string& method, const std::string& path, const std::string& token,
                const json& body = json::object()) {
    return svc.handle(method, path, token.empty() ? "" : "Bearer " + token, method == "POST" ? body.dump() : "");
  }

  std::string add_user(const std::string& id, const std::string& role) {
    auto r = call("POST", "/admin/users", kAdmin, {{"user_id", id}, {"role", role}});
    EXPECT_EQ(r.status, 201) << r.body;
    return r.body["token"];
  }

  std::vector<std::string> first_instances(std::size_t n) const {
    std::vector<std::string> out;
    for (const auto& i : ds.instances()) {
      if (out.size() == n) break;
      out.push_back(i.instance_id);
    }
    return out;
  }

  // An annotator who has passed qualification without doing the tasks.
  std::string qualified(const std::string& id) {
    auto token = add_user(id, "annotator");
    auto r = call("POST", "/admin/qualifications", kAdmin, {{"annotator_id", id}, {"instance_ids", first_instances(6)}});
    EXPECT_EQ(r.status, 201) << r.body;
    r = call("POST", "/admin/qualifications/" + id + "/decision", kAdmin, {{"status", "passed"}});
    EXPECT_EQ(r.status, 200) << r.body;
    return token;
  }

  // A well-formed annotation for the task's instance.
  json valid_annotation(const json& task, const std::string& question = "Why does that matter here?") const {
    const auto& inst = ds.instance(task["instance_id"]);
    return {{"task_id", task["task_id"]},
            {"question", question},
            {"anchor_index", inst.elab_index - 1},
            {"target", {{"sentence_index", inst.elab_index - 1}, {"start_token", 0}, {"end_token", 1}}}};
  }

  TempWorkspace ws;
  corpus::Dataset ds;
  Store store;
  backends::LexiconTagger tagger;
  backends::RuleBasedQuestionClassifier classifier;
  Service svc;
};

corpus::Dataset corpus_of(std::size_t n, bool sentinels = false) {
  synth::SyntheticOptions opt;
  opt.sentinel_elaborations = sentinels;
  auto ds = synth::synthetic_with_instances(101, n, opt);
  // Annotations come from the store; strip the synthetic ones.
  corpus::Dataset bare;
  for (const auto& d : ds.documents()) bare.add_document(d);
  for (const auto& i : ds.instances()) bare.add_instance(i.instance_id, i.doc_id, i.elab_index, i.split);
  return bare;
}

std::vector<std::string> field_codes(const Response& r) {
  std::vector<std::string> out;
  for (const auto& f : r.body["error"]["fields"]) out.push_back(f["field"].get<std::string>() + ":" + f["code"].get<std::string>());
  return out;
}

bool has_code(const Response& r, const std::string& field_code) {
  auto c = field_codes(r);
  return std::find(c.begin(), c.end(), field_code) != c.end();
}

// Drains tasks for one annotator, submitting a valid annotation for each.
int drain(Harness& h, const std::string& token) {
  int n = 0;
  for (;;) {
    auto t = h.call("POST", "/tasks/next", token);
    if (t.status == 204) return n;
    EXPECT_EQ(t.status, 200) << t.body;
    if (t.status != 200) return n;
    auto s = h.call("POST", "/annotations", token, h.valid_annotation(t.body));
    EXPECT_EQ(s.status, 201) << s.body;
    ++n;
  }
}

}  // namespace

// ---- store integrity ----

TEST(ServiceStore, TaskStateMovesForwardOnly) {
  Harness h(corpus_of(8));
  auto token = h.qualified("ann");
  auto t = h.call("POST", "/tasks/next", token).body;
  std::string id = t["task_id"];
  EXPECT_FALSE(h.store.approve(id));  // open -> approved skips a state
  ASSERT_EQ(h.call("POST", "/annotations", token, h.valid_annotation(t)).status, 201);
  EXPECT_TRUE(h.store.approve(id));
  EXPECT_FALSE(h.store.approve(id));

  sql::Database raw(h.ws.path("svc.sqlite").string());
  EXPECT_THROW(raw.run("UPDATE tasks SET state = 'open' WHERE task_id = ?", {id}), sql::StoreError);
  EXPECT_THROW(raw.run("UPDATE tasks SET state = 'submitted' WHERE task_id = ?", {id}), sql::StoreError);
  EXPECT_EQ(h.store.task(id)->state, "approved");
}

TEST(ServiceStore, AnnotationsAreAppendOnly) {
  Harness h(corpus_of(8));
  auto token = h.qualified("ann");
  auto t = h.call("POST", "/tasks/next", token).body;
  ASSERT_EQ(h.call("POST", "/annotations", token, h.valid_annotation(t)).status, 201);
  sql::Database raw(h.ws.path("svc.sqlite").string());
  EXPECT_THROW(raw.run("UPDATE annotations SET question = 'edited'"), sql::StoreError);
  EXPECT_THROW(raw.run("DELETE FROM annotations"), sql::StoreError);
  auto all = h.store.annotations(false);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].annotation.question, "Why does that matter here?");
}

TEST(ServiceStore, ConcurrentSubmitsOfOneTaskSucceedOnce) {
  Harness h(corpus_of(8));
  h.qualified("ann");
  auto task = h.store.next_annotation_task("ann", h.first_instances(8), 2);
  ASSERT_TRUE(task);
  corpus::QUDAnnotation a;
  a.instance_id = task->instance_id;
  a.annotator_id = "ann";
  a.question = "Why?";
  a.anchor_index = 0;
  std::atomic<int> wins{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] { wins += h.store.submit_annotation(*task, a) ? 1 : 0; });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(wins.load(), 1);
  EXPECT_EQ(h.store.annotations(false).size(), 1u);
}

TEST(ServiceStore, StatePersistsAcrossReopen) {
  TempWorkspace ws("reopen");
  auto path = ws.path("s.sqlite").string();
  {
    Store s(path);
    s.add_user("ann", Role::annotator, "token-aaaaaaaaaaaaaaaa");
    s.set_qualification_set("ann", {"a", "b", "c", "d", "e", "f"});
    s.decide_qualification("ann", true);
  }
  Store s(path);
  EXPECT_EQ(s.user_by_token("token-aaaaaaaaaaaaaaaa")->user_id, "ann");
  EXPECT_FALSE(s.user_by_token("token-bbbbbbbbbbbbbbbb"));
  EXPECT_EQ(s.qualification("ann")->status, "passed");
  EXPECT_THROW(s.set_qualification_set("ann", {"a", "b"}), ValidationError);
}

// ---- scheduling ----

TEST(ServiceScheduling, NextTaskIsIdempotentWhileOpen) {
  Harness h(corpus_of(8));
  auto token = h.qualified("ann");
  auto a = h.call("POST", "/tasks/next", token);
  auto b = h.call("POST", "/tasks/next", token);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  EXPECT_EQ(h.call("GET", "/tasks/" + a.body["task_id"].get<std::string>(), token).body, a.body);
}

TEST(ServiceScheduling, DefaultRedundancyIsTwo) {
  Harness h(corpus_of(12));
  std::vector<std::string> tokens;
  for (const char* id : {"a1", "a2", "a3", "a4"}) tokens.push_back(h.qualified(id));
  // Interleave so load balancing matters.
  int total = 0;
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& tok : tokens) {
      auto t = h.call("POST", "/tasks/next", tok);
      if (t.status == 204) continue;
      ASSERT_EQ(t.status, 200);
      ASSERT_EQ(h.call("POST", "/annotations", tok, h.valid_annotation(t.body)).status, 201);
      ++total;
      progress = true;
    }
  }
  EXPECT_EQ(total, 24);
  std::map<std::string, std::set<std::string>> by_instance;
  for (const auto& s : h.store.annotations(false)) {
    EXPECT_TRUE(by_instance[s.annotation.instance_id].insert(s.annotation.annotator_id).second)
        << "annotator repeated on " << s.annotation.instance_id;
  }
  EXPECT_EQ(by_instance.size(), 12u);
  for (const auto& [id, who] : by_instance) EXPECT_EQ(who.size(), 2u) << id;
}

TEST(ServiceScheduling, RedundancyOverrideForSubset) {
  Harness h(corpus_of(300));
  auto ids = h.first_instances(300);
  std::vector<std::string> subset(ids.begin() + 10, ids.begin() + 290);
  ASSERT_EQ(subset.size(), 280u);
  auto r = h.call("POST", "/admin/redundancy", kAdmin, {{"instance_ids", subset}, {"redundancy", 3}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.body["updated"], 280);

  int total = 0;
  for (const char* id : {"a1", "a2", "a3", "a4"}) total += drain(h, h.qualified(id));
  EXPECT_EQ(total, 280 * 3 + 20 * 2);
  std::map<std::string, std::set<std::string>> by_instance;
  for (const auto& s : h.store.annotations(false)) by_instance[s.annotation.instance_id].insert(s.annotation.annotator_id);
  std::set<std::string> in_subset(subset.begin(), subset.end());
  for (const auto& id : ids) EXPECT_EQ(by_instance[id].size(), in_subset.count(id) ? 3u : 2u) << id;
}

// ---- access and qualification ----

TEST(ServiceAccess, TokensAndRoles) {
  Harness h(corpus_of(8));
  EXPECT_EQ(h.call("GET", "/healthz", "").status, 200);
  EXPECT_EQ(h.call("POST", "/tasks/next", "").status, 401);
  EXPECT_EQ(h.call("POST", "/tasks/next", "not-a-real-token-at-all").status, 401);
  auto judge = h.add_user("j1", "judge");
  auto ann = h.add_user("ann", "annotator");
  EXPECT_EQ(h.call("POST", "/admin/users", ann, {{"user_id", "x"}, {"role", "judge"}}).status, 403);
  EXPECT_EQ(h.call("POST", "/tasks/next", judge).status, 403);
  EXPECT_EQ(h.call("POST", "/tasks/next", kAdmin).status, 403);
  EXPECT_EQ(h.call("POST", "/admin/users", kAdmin, {{"user_id", "ann"}, {"role", "judge"}}).status, 409);
  EXPECT_EQ(h.call("POST", "/admin/users", kAdmin, {{"user_id", "z"}, {"role", "boss"}}).status, 422);
  EXPECT_EQ(h.svc.handle("POST", "/admin/users", "Bearer " + kAdmin, "{not json").status, 400);
  EXPECT_EQ(h.call("GET", "/nowhere", ann).status, 404);

  auto r = h.call("POST", "/tasks/next", ann);
  EXPECT_EQ(r.status, 403);
  EXPECT_EQ(r.body["error"]["code"], "not_qualified");
}

TEST(ServiceAccess, QualificationFlow) {
  Harness h(corpus_of(10));
  auto ann = h.add_user("ann", "annotator");
  EXPECT_EQ(h.call("POST", "/qualification/next", ann).body["error"]["code"], "not_enrolled");

  auto five = h.first_instances(5);
  auto r = h.call("POST", "/admin/qualifications", kAdmin, {{"annotator_id", "ann"}, {"instance_ids", five}});
  EXPECT_EQ(r.status, 422);
  EXPECT_TRUE(has_code(r, "instance_ids:wrong_size"));
  auto dup = five;
  dup.push_back(five[0]);
  EXPECT_TRUE(has_code(h.call("POST", "/admin/qualifications", kAdmin, {{"annotator_id", "ann"}, {"instance_ids", dup}}),
                       "instance_ids:duplicate"));
  auto unknown = five;
  unknown.push_back("ghost");
  EXPECT_TRUE(has_code(h.call("POST", "/admin/qualifications", kAdmin, {{"annotator_id", "ann"}, {"instance_ids", unknown}}),
                       "instance_ids:unknown_instance"));

  auto six = h.first_instances(6);
  std::reverse(six.begin(), six.end());
  r = h.call("POST", "/admin/qualifications", kAdmin, {{"annotator_id", "ann"}, {"instance_ids", six}});
  ASSERT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(r.body["status"], "pending");

  std::vector<std::string> served;
  for (;;) {
    auto t = h.call("POST", "/qualification/next", ann);
    if (t.status == 204) break;
    ASSERT_EQ(t.status, 200) << t.body;
    EXPECT_EQ(t.body["kind"], "qualification");
    served.push_back(t.body["instance_id"]);
    ASSERT_EQ(h.call("POST", "/annotations", ann, h.valid_annotation(t.body)).status, 201);
  }
  EXPECT_EQ(served, six);
  EXPECT_EQ(h.call("POST", "/tasks/next", ann).status, 403);
  EXPECT_EQ(h.store.annotations(false, true).size(), 6u);
  EXPECT_TRUE(h.store.annotations(false, false).empty());

  EXPECT_EQ(h.call("POST", "/admin/qualifications/ann/decision", kAdmin, {{"status", "maybe"}}).status, 422);
  EXPECT_EQ(h.call("POST", "/admin/qualifications/nobody/decision", kAdmin, {{"status", "passed"}}).status, 404);
  ASSERT_EQ(h.call("POST", "/admin/qualifications/ann/decision", kAdmin, {{"status", "passed"}}).status, 200);
  EXPECT_EQ(h.call("GET", "/admin/qualifications/ann", kAdmin).body["status"], "passed");
  EXPECT_EQ(h.call("POST", "/tasks/next", ann).status, 200);
  EXPECT_EQ(h.call("POST", "/qualification/next", ann).status, 204);
}

// ---- annotation validation ----

TEST(ServiceAnnotations, FieldErrors) {
  Harness h(corpus_of(12));
  auto ann = h.qualified("ann");
  auto other = h.qualified("other");
  json task;
  // Find a task whose elaboration has at least two prior sentences.
  for (;;) {
    auto t = h.call("POST", "/tasks/next", ann);
    ASSERT_EQ(t.status, 200);
    if (h.ds.instance(t.body["instance_id"]).elab_index >= 2) {
      task = t.body;
      break;
    }
    ASSERT_EQ(h.call("POST", "/annotations", ann, h.valid_annotation(t.body)).status, 201);
  }
  const auto& inst = h.ds.instance(task["instance_id"]);
  int anchor = inst.elab_index - 1;
  int n = static_cast<int>(corpus::tokenize(h.ds.document(inst.doc_id).at(anchor).text).size());
  auto body = [&](auto mutate) {
    json j = h.valid_annotation(task);
    mutate(j);
    return h.call("POST", "/annotations", ann, j);
  };

  auto r = body([](json& j) { j.erase("question"); });
  EXPECT_EQ(r.status, 422);
  EXPECT_TRUE(has_code(r, "question:required"));
  EXPECT_TRUE(has_code(body([](json& j) { j["question"] = "   "; }), "question:required"));
  EXPECT_TRUE(has_code(body([](json& j) { j.erase("target"); }), "target:required"));
  EXPECT_TRUE(has_code(body([](json& j) { j.erase("anchor_index"); }), "anchor_index:required"));
  EXPECT_TRUE(has_code(body([&](json& j) { j["anchor_index"] = inst.elab_index; }), "anchor_index:out_of_context"));
  EXPECT_TRUE(has_code(body([&](json& j) { j["target"]["sentence_index"] = inst.elab_index; }),
                       "target.sentence_index:out_of_context"));
  EXPECT_TRUE(has_code(body([&](json& j) { j["target"]["sentence_index"] = anchor - 1; }),
                       "target.sentence_index:not_in_anchor"));
  r = body([&](json& j) { j["target"]["end_token"] = n + 1; });
  EXPECT_TRUE(has_code(r, "target.end_token:out_of_range"));
  EXPECT_NE(r.body.dump().find("length of " + std::to_string(n) + " tokens"), std::string::npos) << r.body;
  EXPECT_TRUE(has_code(body([](json& j) { j["target"]["start_token"] = -1; }), "target.start_token:out_of_range"));
  EXPECT_TRUE(has_code(body([](json& j) { j["target"]["start_token"] = 1; }), "target.end_token:empty_span"));
  EXPECT_TRUE(has_code(body([](json& j) { j["anchor_index"] = "two"; }), "anchor_index:type"));
  EXPECT_EQ(h.svc.handle("POST", "/annotations", "Bearer " + ann, "[1,2]").status, 422);

  // end_token == n is the last valid exclusive end.
  EXPECT_EQ(h.call("POST", "/annotations", other, h.valid_annotation(task)).status, 403);
  r = body([&](json& j) { j["target"]["end_token"] = n; });
  ASSERT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(body([](json&) {}).body["error"]["code"], "task_closed");
  auto stored = h.store.annotations(false).back().annotation;
  EXPECT_EQ(stored.target->end_token, n);
  EXPECT_EQ(stored.anchor_index, anchor);
}

TEST(ServiceAnnotations, OrganizationalNeedsNoQuestionOrTarget) {
  Harness h(corpus_of(6));
  auto ann = h.qualified("ann");
  auto t = h.call("POST", "/tasks/next", ann).body;
  auto r = h.call("POST", "/annotations", ann, {{"task_id", t["task_id"]}, {"is_organizational", true}});
  ASSERT_EQ(r.status, 201) << r.body;
  auto a = h.store.annotations(false).back().annotation;
  EXPECT_TRUE(a.is_organizational);
  EXPECT_FALSE(a.target);
}

// ---- guardrail ----

namespace {

corpus::Dataset guardrail_corpus() {
  corpus::Dataset ds;
  ds.add_document({"g",
                   {{0, "Scientists studied the ocean floor for decades.", false},
                    {1, "The submarine carried robotic cameras, sonar arrays, pressure sensors, thermal probes "
                        "and sample drills toward deep volcanic vents.",
                     true}},
                   std::nullopt});
  ds.add_instance("g-1", "g", 1, corpus::Split::test);
  for (int i = 0; i < 6; ++i) {
    ds.add_document({"pad" + std::to_string(i), {{0, "One.", false}, {1, "Two.", true}}, std::nullopt});
    ds.add_instance("pad-" + std::to_string(i), "pad" + std::to_string(i), 1, corpus::Split::test);
  }
  return ds;
}

}  // namespace

TEST(ServiceGuardrail, OverlapMatchesHandCount) {
  std::string e = guardrail_corpus().document("g").at(1).text;
  // Content words of the question: submarine carried robotic cameras sonar
  // pressure sensors thermal drills lunch; nine of ten occur in E.
  std::string q = "Why the submarine carried robotic cameras, sonar, pressure sensors, thermal drills and lunch?";
  EXPECT_DOUBLE_EQ(content_overlap(q, e), 0.9);
  EXPECT_DOUBLE_EQ(content_overlap("What did the crew eat for lunch?", e), 0.0);
  EXPECT_DOUBLE_EQ(content_overlap("What is it?", e), 0.0);  // no content words
  EXPECT_DOUBLE_EQ(content_overlap("Submarine SONAR?", e), 1.0);
}

TEST(ServiceGuardrail, ContentOverlapProperties) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    std::string q = synth::random_sentence(rng), e = synth::random_sentence(rng);
    double o = content_overlap(q, e);
    EXPECT_GE(o, 0.0);
    EXPECT_LE(o, 1.0);
    if (!content_tokens(q).empty()) EXPECT_DOUBLE_EQ(content_overlap(q, q + " " + e), 1.0);
  }
}

TEST(ServiceGuardrail, RejectsQuestionsThatLeanOnTheElaboration) {
  Harness h(guardrail_corpus());
  auto ann = h.add_user("ann", "annotator");
  std::vector<std::string> six = {"g-1", "pad-0", "pad-1", "pad-2", "pad-3", "pad-4"};
  ASSERT_EQ(h.call("POST", "/admin/qualifications", kAdmin, {{"annotator_id", "ann"}, {"instance_ids", six}}).status, 201);
  auto t = h.call("POST", "/qualification/next", ann).body;
  ASSERT_EQ(t["instance_id"], "g-1");

  auto r = h.call("POST", "/annotations", ann,
                  h.valid_annotation(t, "Why the submarine carried robotic cameras, sonar, pressure sensors, thermal drills and lunch?"));
  EXPECT_EQ(r.status, 422);
  EXPECT_TRUE(has_code(r, "question:elaboration_overlap"));
  EXPECT_NE(r.body.dump().find("0.90"), std::string::npos);

  // Exactly at the threshold is rejected; just below passes.
  r = h.call("POST", "/annotations", ann, h.valid_annotation(t, "Why did the submarine go there?"));  // submarine, go: 1/2
  EXPECT_TRUE(has_code(r, "question:elaboration_overlap")) << r.body;
  r = h.call("POST", "/annotations", ann, h.valid_annotation(t, "Why did scientists send the submarine down there?"));
  EXPECT_EQ(r.status, 201) << r.body;  // scientists, send, submarine, down: 1/4
}

// ---- instance payloads ----

TEST(ServicePayload, ContextNeverContainsTheElaboration) {
  Harness h(corpus_of(30, true));
  auto ann = h.add_user("ann", "annotator");
  for (const auto& inst : h.ds.instances()) {
    auto r = h.call("GET", "/instances/" + inst.instance_id, ann);
    ASSERT_EQ(r.status, 200);
    std::string mine = synth::sentinel(std::stoi(inst.doc_id.substr(3)), inst.elab_index);
    EXPECT_EQ(r.body["context"].dump().find(mine), std::string::npos) << inst.instance_id;
    EXPECT_NE(r.body["elaboration"]["text"].get<std::string>().find(mine), std::string::npos);
    EXPECT_EQ(r.body["elaboration"]["highlighted"], true);
    const auto& ctx = r.body["context"];
    EXPECT_EQ(ctx.size(), static_cast<std::size_t>(std::min(inst.elab_index, 5)));
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      EXPECT_LT(ctx[i]["index"].get<int>(), inst.elab_index);
      EXPECT_EQ(ctx[i]["is_previous"], i + 1 == ctx.size());
      EXPECT_EQ(ctx[i]["tokens"], json(corpus::tokenize(ctx[i]["text"].get<std::string>())));
    }
  }
  EXPECT_EQ(h.call("GET", "/instances/ghost", ann).status, 404);
}

// ---- judgments and rankings ----

namespace {

struct EvalHarness : Harness {
  EvalHarness() : Harness(corpus_of(12), config()) {
    j1 = add_user("j1", "judge");
    j2 = add_user("j2", "judge");
    j3 = add_user("j3", "judge");
  }

  static ServiceConfig config() {
    ServiceConfig c;
    c.seed = 2024;
    return c;
  }

  Response add_ranking_item(const std::string& item, const std::string& instance, std::vector<std::string> judges = {}) {
    json cands = json::array();
    int k = 0;
    for (const char* s : {"context_only", "generic", "qud:human", "qud:INQ-PredT"}) {
      cands.push_back({{"system", s}, {"text", "Candidate text " + std::to_string(k++) + "."}});
    }
    json body = {{"item_id", item}, {"kind", "ranking"}, {"instance_id", instance}, {"candidates", cands}};
    if (!judges.empty()) body["judges"] = judges;
    return call("POST", "/admin/eval-items", kAdmin, body);
  }

  std::string j1, j2, j3;
};

}  // namespace

TEST(ServiceEval, QuestionJudgments) {
  EvalHarness h;
  auto inst = h.first_instances(2);
  auto r = h.call("POST", "/admin/eval-items", kAdmin,
                  {{"item_id", "q1"}, {"kind", "question"}, {"instance_id", inst[0]}, {"question_id", "qa"},
                   {"system", "INQ-PredT"}, {"question", "Why did it land?"}, {"judges", {"j1", "j2"}}});
  ASSERT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(h.call("POST", "/admin/eval-items", kAdmin,
                   {{"item_id", "q1"}, {"kind", "question"}, {"instance_id", inst[0]}, {"question_id", "qa"},
                    {"system", "INQ-PredT"}, {"question", "Again?"}})
                .status,
            409);
  EXPECT_TRUE(has_code(h.call("POST", "/admin/eval-items", kAdmin,
                              {{"item_id", "q2"}, {"kind", "question"}, {"instance_id", inst[0]}, {"question_id", "qb"},
                               {"system", "DCQA-ft"}, {"question", "Why?"}, {"judges", {"ann"}}}),
                       "judges:unknown"));

  auto view = h.call("GET", "/eval-items/q1", h.j1);
  ASSERT_EQ(view.status, 200);
  EXPECT_EQ(view.body["question"], "Why did it land?");
  EXPECT_FALSE(view.body.contains("system"));
  EXPECT_EQ(h.call("GET", "/eval-items/q1", h.j3).status, 404);  // not assigned

  json j = {{"item_id", "q1"}, {"reasonable", true}, {"answered", false}};
  EXPECT_EQ(h.call("POST", "/judgments", h.j1, j).status, 201);
  auto dup = h.call("POST", "/judgments", h.j1, j);
  EXPECT_EQ(dup.status, 409);
  EXPECT_EQ(dup.body["error"]["code"], "duplicate");
  EXPECT_EQ(h.call("POST", "/judgments", h.j3, j).status, 404);
  EXPECT_TRUE(has_code(h.call("POST", "/judgments", h.j2, {{"item_id", "q1"}}), "reasonable:required"));
  EXPECT_EQ(h.call("POST", "/judgments", h.j2, {{"item_id", "q1"}, {"reasonable", false}, {"answered", false}}).status, 201);

  auto rep = h.call("GET", "/reports/judgments", h.j1).body;
  ASSERT_EQ(rep["empty"], false);
  std::vector<metrics::HumanQuestionJudgment> oracle = {{"qa", "j1", true, false}, {"qa", "j2", false, false}};
  EXPECT_EQ(rep["data"], metrics::tally_question_judgments(oracle, {{"qa", "INQ-PredT"}}).to_json());
}

TEST(ServiceEval, RankingsValidateAndRejectDuplicates) {
  EvalHarness h;
  auto inst = h.first_instances(1)[0];
  ASSERT_EQ(h.add_ranking_item("r1", inst).status, 201);
  auto bad = h.call("POST", "/admin/eval-items", kAdmin,
                    {{"item_id", "r2"}, {"kind", "ranking"}, {"instance_id", inst},
                     {"candidates", {{{"system", "a"}, {"text", "x"}}, {{"system", "a"}, {"text", "y"}}}}});
  EXPECT_TRUE(has_code(bad, "candidates:duplicate"));
  bad = h.call("POST", "/admin/eval-items", kAdmin,
               {{"item_id", "r2"}, {"kind", "ranking"}, {"instance_id", inst}, {"candidates", {{{"system", "a"}, {"text", "x"}}}}});
  EXPECT_TRUE(has_code(bad, "candidates:invalid"));

  auto view = h.call("GET", "/eval-items/r1", h.j1).body;
  ASSERT_EQ(view["candidates"].size(), 4u);
  EXPECT_EQ(view["picks"], 2);
  for (const char* s : {"context_only", "\"generic\"", "qud:"}) EXPECT_EQ(view.dump().find(s), std::string::npos) << s;
  std::string c0 = view["candidates"][0]["candidate_id"], c1 = view["candidates"][1]["candidate_id"];

  auto post = [&](const std::string& tok, const std::string& crit, const std::string& a, const std::string& b) {
    return h.call("POST", "/rankings", tok, {{"item_id", "r1"}, {"criterion", crit}, {"first", a}, {"second", b}});
  };
  EXPECT_TRUE(has_code(post(h.j1, "elaboration_like", c0, c0), "second:duplicate_pick"));
  EXPECT_TRUE(has_code(post(h.j1, "elaboration_like", c0, "cffffffffff"), "second:unknown_candidate"));
  EXPECT_TRUE(has_code(post(h.j1, "fluency", c0, c1), "criterion:unknown"));
  EXPECT_EQ(post(h.j1, "elaboration_like", c0, c1).status, 201);
  EXPECT_EQ(post(h.j1, "elaboration_like", c1, c0).status, 409);
  EXPECT_EQ(post(h.j1, "coherence", c1, c0).status, 201);
  EXPECT_EQ(h.call("POST", "/judgments", h.j1, {{"item_id", "r1"}, {"reasonable", true}, {"answered", true}}).status, 422);
  EXPECT_EQ(h.store.rankings().size(), 2u);
}

TEST(ServiceEval, CandidateOrderIsSeededPerJudgeAndItem) {
  EvalHarness h;
  auto inst = h.first_instances(1)[0];
  std::vector<std::string> systems = {"context_only", "generic", "qud:human", "qud:INQ-PredT"};
  bool judges_differ = false;
  for (int i = 0; i < 12; ++i) {
    std::string item = "r" + std::to_string(i);
    ASSERT_EQ(h.add_ranking_item(item, inst).status, 201);
    std::map<std::string, std::vector<std::string>> order;
    for (const auto& [judge, tok] : {std::pair{"j1", h.j1}, std::pair{"j2", h.j2}}) {
      auto a = h.call("GET", "/eval-items/" + item, tok).body["candidates"];
      EXPECT_EQ(a, h.call("GET", "/eval-items/" + item, tok).body["candidates"]);
      for (const auto& c : a) order[judge].push_back(c["candidate_id"]);

      // Oracle: Fisher-Yates from the top with rejection-sampled draws.
      std::vector<std::string> expect;
      for (const auto& s : systems) expect.push_back(candidate_id(item, s));
      std::mt19937_64 rng(util::sha256_u64("2024|" + std::string(judge) + "|" + item));
      for (std::size_t k = expect.size(); k > 1; --k) {
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % k, x;
        do x = rng(); while (x >= limit);
        std::swap(expect[k - 1], expect[x % k]);
      }
      EXPECT_EQ(order[judge], expect) << judge << " " << item;
    }
    judges_differ = judges_differ || order["j1"] != order["j2"];
  }
  EXPECT_TRUE(judges_differ);
}

// ---- reports ----

TEST(ServiceReports, EmptyThenMatchesLibraryOnApprovedAnnotations) {
  Harness h(corpus_of(10));
  auto fp = h.call("GET", "/healthz", "").body["config_fingerprint"];
  auto a1 = h.qualified("a1");
  for (const auto& name : Service::report_names()) {
    auto r = h.call("GET", "/reports/" + name, a1);
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body["empty"], true) << name;
    EXPECT_EQ(r.body["config_fingerprint"], fp);
    EXPECT_TRUE(r.body["reason"].is_string());
  }
  EXPECT_EQ(h.call("GET", "/reports/bogus", a1).status, 404);

  auto a2 = h.qualified("a2");
  drain(h, a1);
  drain(h, a2);
  // Nothing approved yet, so reports are still empty.
  EXPECT_EQ(h.call("GET", "/reports/agreement", a1).body["empty"], true);

  // Approve all but the last submission; build the oracle dataset from scratch.
  auto submitted = h.store.annotations(false);
  ASSERT_EQ(submitted.size(), 20u);
  corpus::Dataset oracle;
  for (const auto& d : h.ds.documents()) oracle.add_document(d);
  for (const auto& i : h.ds.instances()) oracle.add_instance(i.instance_id, i.doc_id, i.elab_index, i.split);
  for (std::size_t i = 0; i + 1 < submitted.size(); ++i) {
    ASSERT_EQ(h.call("POST", "/admin/tasks/" + submitted[i].task_id + "/approve", kAdmin).status, 200);
    auto a = submitted[i].annotation;
    const auto& inst = h.ds.instance(a.instance_id);
    a.target = corpus::make_span(h.ds.document(inst.doc_id).at(a.anchor_index), 0, 1);
    oracle.add_annotation(a);
  }
  EXPECT_EQ(h.call("POST", "/admin/tasks/" + submitted[0].task_id + "/approve", kAdmin).status, 409);
  EXPECT_EQ(h.call("POST", "/admin/tasks/task-none/approve", kAdmin).status, 404);

  auto agreement = h.call("GET", "/reports/agreement", a1).body;
  ASSERT_EQ(agreement["empty"], false) << agreement;
  EXPECT_EQ(agreement["data"], analysis::anchor_agreement(oracle).to_json());
  auto targets = h.call("GET", "/reports/targets", a1).body;
  backends::LexiconTagger tagger;
  EXPECT_EQ(targets["data"]["overlap"], analysis::target_overlap_rate(oracle).to_json());
  EXPECT_EQ(targets["data"]["statistics"]["backend_id"], tagger.descriptor().backend_id);
  auto qtypes = h.call("GET", "/reports/qtypes", a1).body;
  backends::RuleBasedQuestionClassifier cls;
  auto expect_types = analysis::question_type_distribution(analysis::dataset_questions(oracle), cls).to_json();
  expect_types["backend_id"] = cls.descriptor().backend_id;
  EXPECT_EQ(qtypes["data"], expect_types);
}

TEST(ServiceReports, FingerprintTracksConfiguration) {
  auto ds = corpus_of(6);
  Harness a(ds), b(ds);
  ServiceConfig changed;
  changed.redundancy = 3;
  Harness c(ds, changed);
  EXPECT_EQ(a.svc.config_fingerprint(), b.svc.config_fingerprint());
  EXPECT_NE(a.svc.config_fingerprint(), c.svc.config_fingerprint());
  ServiceConfig other_token;
  other_token.admin_token = "a-completely-different-token";
  EXPECT_EQ(ServiceConfig{}.to_json(), other_token.to_json());
}

// ---- configuration and HTTP ----

TEST(ServiceServer, AdminTokenComesFromEnvironment) {
  json c = {{"dataset", "x.jsonl"}, {"service", {{"admin_token_env", "ELABQUD_TEST_TOKEN"}, {"redundancy", 3}}}};
  auto cfg = pipeline::parse_config(c, "/tmp");
  ::unsetenv("ELABQUD_TEST_TOKEN");
  EXPECT_THROW(service_config(cfg), ConfigError);
  ::setenv("ELABQUD_TEST_TOKEN", "short", 1);
  EXPECT_THROW(service_config(cfg), ConfigError);
  ::setenv("ELABQUD_TEST_TOKEN", "long-enough-token-1234", 1);
  auto s = service_config(cfg);
  EXPECT_EQ(s.redundancy, 3);
  EXPECT_EQ(s.admin_token, "long-enough-token-1234");
  EXPECT_EQ(store_path(cfg), "/tmp/service.sqlite");
  ::unsetenv("ELABQUD_TEST_TOKEN");
}

TEST(ServiceServer, HttpRoundTrip) {
  Harness h(corpus_of(8));
  httplib::Server server;
  h.svc.mount(server);
  int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["config_fingerprint"], h.svc.config_fingerprint());

  httplib::Headers admin = {{"Authorization", "Bearer " + kAdmin}};
  auto user = client.Post("/admin/users", admin, json{{"user_id", "ann"}, {"role", "annotator"}}.dump(), "application/json");
  ASSERT_TRUE(user);
  EXPECT_EQ(user->status, 201);
  std::string tok = json::parse(user->body)["token"];
  httplib::Headers ann = {{"Authorization", "Bearer " + tok}};
  auto denied = client.Post("/tasks/next", ann, "", "application/json");
  ASSERT_TRUE(denied);
  EXPECT_EQ(denied->status, 403);
  EXPECT_EQ(json::parse(denied->body)["error"]["code"], "not_qualified");
  auto anon = client.Get("/reports/agreement");
  ASSERT_TRUE(anon);
  EXPECT_EQ(anon->status, 401);

  server.stop();
  t.join();
}
