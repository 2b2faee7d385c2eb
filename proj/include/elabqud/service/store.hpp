#pragma once

// Persistent state of the annotation service: users, qualification records,
// annotation tasks, the append-only annotation log, evaluation items and the
// judgments and rankings submitted for them.

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "elabqud/corpus/types.hpp"
#include "elabqud/metrics/human_eval.hpp"
#include "elabqud/service/sqlite.hpp"
#include "elabqud/util/hash.hpp"
#include "json.hpp"

namespace elabqud::service {

using nlohmann::json;

enum class Role { annotator, judge };

inline std::string to_string(Role r) { return r == Role::annotator ? "annotator" : "judge"; }

inline std::optional<Role> parse_role(const std::string& s) {
  if (s == "annotator") return Role::annotator;
  if (s == "judge") return Role::judge;
  return std::nullopt;
}

struct User {
  std::string user_id;
  Role role = Role::annotator;
};

inline constexpr std::size_t kQualificationSetSize = 6;

struct QualificationRecord {
  std::string annotator_id;
  std::vector<std::string> qualification_set;
  std::string status;  // pending, passed, failed

  json to_json() const {
    return {{"annotator_id", annotator_id}, {"qualification_set", qualification_set}, {"status", status}};
  }
};

struct Task {
  std::string task_id;
  std::string kind;  // annotation or qualification
  std::string instance_id;
  std::string assigned_to;
  std::string state;  // open, submitted, approved
};

struct StoredAnnotation {
  std::int64_t id = 0;
  std::string task_id;
  std::string kind;
  corpus::QUDAnnotation annotation;
};

struct EvalItem {
  std::string item_id;
  std::string kind;  // question or ranking
  std::string instance_id;
  json payload;      // question: {question_id, system, question}; ranking: {candidates: [{system, text}]}
};

class Store {
 public:
  explicit Store(const std::string& path) : db_(path) { migrate(); }

  // ---- users ----

  void add_user(const std::string& user_id, Role role, const std::string& token) {
    std::lock_guard lock(mu_);
    db_.run("INSERT INTO users(user_id, role, token_sha256) VALUES (?, ?, ?)",
            {user_id, to_string(role), util::sha256_hex(token)});
  }

  std::optional<User> user_by_token(const std::string& token) {
    std::lock_guard lock(mu_);
    auto st = db_.prepare("SELECT user_id, role FROM users WHERE token_sha256 = ?");
    st.bind(1, util::sha256_hex(token));
    if (!st.step()) return std::nullopt;
    return User{st.text(0), *parse_role(st.text(1))};
  }

  std::optional<User> user(const std::string& user_id) {
    std::lock_guard lock(mu_);
    auto st = db_.prepare("SELECT user_id, role FROM users WHERE user_id = ?");
    st.bind(1, user_id);
    if (!st.step()) return std::nullopt;
    return User{st.text(0), *parse_role(st.text(1))};
  }

  // ---- qualification ----

  void set_qualification_set(const std::string& annotator_id, const std::vector<std::string>& instance_ids) {
    if (instance_ids.size() != kQualificationSetSize) {
      throw ValidationError("a qualification set has exactly " + std::to_string(kQualificationSetSize) + " items");
    }
    std::lock_guard lock(mu_);
    db_.run(
        "INSERT INTO qualifications(annotator_id, instance_ids, status) VALUES (?, ?, 'pending') "
        "ON CONFLICT(annotator_id) DO UPDATE SET instance_ids = excluded.instance_ids, status = 'pending'",
        {annotator_id, json(instance_ids).dump()});
  }

  // Reviewer decision; returns false when no record exists.
  bool decide_qualification(const std::string& annotator_id, bool passed) {
    std::lock_guard lock(mu_);
    return db_.run("UPDATE qualifications SET status = ? WHERE annotator_id = ?",
                   {std::string(passed ? "passed" : "failed"), annotator_id}) == 1;
  }

  std::optional<QualificationRecord> qualification(const std::string& annotator_id) {
    std::lock_guard lock(mu_);
    auto st = db_.prepare("SELECT instance_ids, status FROM qualifications WHERE annotator_id = ?");
    st.bind(1, annotator_id);
    if (!st.step()) return std::nullopt;
    return QualificationRecord{annotator_id, json::parse(st.text(0)).get<std::vector<std::string>>(), st.text(1)};
  }

  // ---- redundancy ----

  void set_redundancy(const std::string& instance_id, int target) {
    if (target < 1) throw ValidationError("redundancy must be at least 1");
    std::lock_guard lock(mu_);
    db_.run(
        "INSERT INTO redundancy(instance_id, target) VALUES (?, ?) "
        "ON CONFLICT(instance_id) DO UPDATE SET target = excluded.target",
        {instance_id, std::int64_t{target}});
  }

  // ---- tasks ----

  static std::string task_id_for(const std::string& kind, const std::string& instance_id,
                                 const std::string& annotator_id) {
    return "task-" + util::sha256_hex(kind + "|" + instance_id + "|" + annotator_id).substr(0, 16);
  }

  std::optional<Task> task(const std::string& task_id) {
    std::lock_guard lock(mu_);
    return task_locked(task_id);
  }

  // The annotator's open task of this kind if any; otherwise a new task on the
  // eligible instance with the fewest assignments (ties by `instances` order)
  // that is below its redundancy target and not already done by them.
  std::optional<Task> next_annotation_task(const std::string& annotator_id, const std::vector<std::string>& instances,
                                           int default_redundancy) {
    std::lock_guard lock(mu_);
    sql::Transaction tx(db_);
    if (auto open = open_task_locked(annotator_id, "annotation")) return open;
    std::map<std::string, std::int64_t> load, target;
    {
      auto st = db_.prepare("SELECT instance_id, COUNT(*) FROM tasks WHERE kind = 'annotation' GROUP BY instance_id");
      while (st.step()) load[st.text(0)] = st.integer(1);
    }
    {
      auto st = db_.prepare("SELECT instance_id, target FROM redundancy");
      while (st.step()) target[st.text(0)] = st.integer(1);
    }
    std::set<std::string> done;
    {
      auto st = db_.prepare("SELECT instance_id FROM tasks WHERE kind = 'annotation' AND annotator_id = ?");
      st.bind(1, annotator_id);
      while (st.step()) done.insert(st.text(0));
    }
    const std::string* best = nullptr;
    std::int64_t best_load = 0;
    for (const auto& id : instances) {
      if (done.count(id)) continue;
      std::int64_t l = load.count(id) ? load[id] : 0;
      std::int64_t t = target.count(id) ? target[id] : default_redundancy;
      if (l >= t) continue;
      if (!best || l < best_load) {
        best = &id;
        best_load = l;
      }
    }
    if (!best) return std::nullopt;
    Task t{task_id_for("annotation", *best, annotator_id), "annotation", *best, annotator_id, "open"};
    insert_task_locked(t);
    tx.commit();
    return t;
  }

  // Qualification instances are served in the order the reviewer set them.
  std::optional<Task> next_qualification_task(const std::string& annotator_id) {
    std::lock_guard lock(mu_);
    sql::Transaction tx(db_);
    if (auto open = open_task_locked(annotator_id, "qualification")) return open;
    auto st = db_.prepare("SELECT instance_ids FROM qualifications WHERE annotator_id = ?");
    st.bind(1, annotator_id);
    if (!st.step()) return std::nullopt;
    auto ids = json::parse(st.text(0)).get<std::vector<std::string>>();
    for (const auto& id : ids) {
      auto existing = task_locked(task_id_for("qualification", id, annotator_id));
      if (existing) continue;
      Task t{task_id_for("qualification", id, annotator_id), "qualification", id, annotator_id, "open"};
      insert_task_locked(t);
      tx.commit();
      return t;
    }
    return std::nullopt;
  }

  // Compare-and-set open -> submitted plus the append to the annotation log,
  // in one transaction. Returns false when the task was not open.
  bool submit_annotation(const Task& task, const corpus::QUDAnnotation& a) {
    std::lock_guard lock(mu_);
    sql::Transaction tx(db_);
    int changed = db_.run("UPDATE tasks SET state = 'submitted' WHERE task_id = ? AND state = 'open' AND annotator_id = ?",
                          {task.task_id, task.assigned_to});
    if (changed != 1) return false;
    json target = a.target ? json{{"sentence_index", a.target->sentence_index},
                                  {"start_token", a.target->start_token},
                                  {"end_token", a.target->end_token}}
                           : json(nullptr);
    db_.run(
        "INSERT INTO annotations(task_id, kind, instance_id, annotator_id, question, target, anchor_index, "
        "is_organizational) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
        {task.task_id, task.kind, a.instance_id, a.annotator_id, a.question,
         a.target ? sql::Value(target.dump()) : sql::Value(nullptr), std::int64_t{a.anchor_index},
         std::int64_t{a.is_organizational ? 1 : 0}});
    tx.commit();
    return true;
  }

  // Compare-and-set submitted -> approved.
  bool approve(const std::string& task_id) {
    std::lock_guard lock(mu_);
    return db_.run("UPDATE tasks SET state = 'approved' WHERE task_id = ? AND state = 'submitted'", {task_id}) == 1;
  }

  // Annotations whose task is approved, in submission order. Qualification
  // annotations are excluded unless asked for.
  std::vector<StoredAnnotation> annotations(bool approved_only = true, bool include_qualification = false) {
    std::lock_guard lock(mu_);
    std::string q =
        "SELECT a.id, a.task_id, a.kind, a.instance_id, a.annotator_id, a.question, a.target, a.anchor_index, "
        "a.is_organizational FROM annotations a JOIN tasks t ON t.task_id = a.task_id WHERE 1 = 1";
    if (approved_only) q += " AND t.state = 'approved'";
    if (!include_qualification) q += " AND a.kind = 'annotation'";
    q += " ORDER BY a.id";
    auto st = db_.prepare(q);
    std::vector<StoredAnnotation> out;
    while (st.step()) {
      StoredAnnotation s;
      s.id = st.integer(0);
      s.task_id = st.text(1);
      s.kind = st.text(2);
      s.annotation.instance_id = st.text(3);
      s.annotation.annotator_id = st.text(4);
      s.annotation.question = st.text(5);
      if (auto t = st.optional_text(6)) {
        auto j = json::parse(*t);
        s.annotation.target = corpus::TargetSpan{j["sentence_index"].get<int>(), j["start_token"].get<int>(),
                                                 j["end_token"].get<int>(), {}};
      }
      s.annotation.anchor_index = static_cast<int>(st.integer(7));
      s.annotation.is_organizational = st.integer(8) != 0;
      out.push_back(std::move(s));
    }
    return out;
  }

  // ---- evaluation items ----

  void add_eval_item(const EvalItem& item, const std::vector<std::string>& judges) {
    std::lock_guard lock(mu_);
    sql::Transaction tx(db_);
    db_.run("INSERT INTO eval_items(item_id, kind, instance_id, payload) VALUES (?, ?, ?, ?)",
            {item.item_id, item.kind, item.instance_id, item.payload.dump()});
    for (const auto& j : judges) db_.run("INSERT INTO eval_assignments(item_id, judge_id) VALUES (?, ?)", {item.item_id, j});
    tx.commit();
  }

  std::optional<EvalItem> eval_item(const std::string& item_id) {
    std::lock_guard lock(mu_);
    auto st = db_.prepare("SELECT kind, instance_id, payload FROM eval_items WHERE item_id = ?");
    st.bind(1, item_id);
    if (!st.step()) return std::nullopt;
    return EvalItem{item_id, st.text(0), st.text(1), json::parse(st.text(2))};
  }

  // Items without an explicit judge list are open to every judge.
  bool assigned(const std::string& item_id, const std::string& judge_id) {
    std::lock_guard lock(mu_);
    auto st = db_.prepare("SELECT COUNT(*), SUM(judge_id = ?) FROM eval_assignments WHERE item_id = ?");
    st.bind(1, judge_id).bind(2, item_id);
    st.step();
    return st.integer(0) == 0 || st.integer(1) > 0;
  }

  std::int64_t add_judgment(const std::string& item_id, const std::string& judge_id, bool reasonable, bool answered) {
    std::lock_guard lock(mu_);
    db_.run("INSERT INTO judgments(item_id, judge_id, reasonable, answered) VALUES (?, ?, ?, ?)",
            {item_id, judge_id, std::int64_t{reasonable}, std::int64_t{answered}});
    return db_.last_insert_rowid();
  }

  std::int64_t add_ranking(const std::string& item_id, const std::string& judge_id, metrics::RankCriterion criterion,
                           const std::string& first, const std::string& second) {
    std::lock_guard lock(mu_);
    db_.run(
        "INSERT INTO rankings(item_id, judge_id, criterion, first_system, second_system) VALUES (?, ?, ?, ?, ?)",
        {item_id, judge_id, metrics::to_string(criterion), first, second});
    return db_.last_insert_rowid();
  }

  // Judgments with the question's system, keyed by the item's question_id.
  std::pair<std::vector<metrics::HumanQuestionJudgment>, std::map<std::string, std::string>> judgments() {
    std::lock_guard lock(mu_);
    auto st = db_.prepare(
        "SELECT j.item_id, j.judge_id, j.reasonable, j.answered, e.payload FROM judgments j "
        "JOIN eval_items e ON e.item_id = j.item_id ORDER BY j.id");
    std::vector<metrics::HumanQuestionJudgment> out;
    std::map<std::string, std::string> system_of;
    while (st.step()) {
      auto payload = json::parse(st.text(4));
      std::string qid = payload["question_id"].get<std::string>();
      system_of[qid] = payload["system"].get<std::string>();
      out.push_back({qid, st.text(1), st.integer(2) != 0, st.integer(3) != 0});
    }
    return {out, system_of};
  }

  // Rankings keyed by item id in place of instance id.
  std::vector<metrics::ElabRanking> rankings() {
    std::lock_guard lock(mu_);
    auto st = db_.prepare("SELECT item_id, judge_id, criterion, first_system, second_system FROM rankings ORDER BY id");
    std::vector<metrics::ElabRanking> out;
    while (st.step()) {
      out.push_back({st.text(0), st.text(1), metrics::parse_criterion(st.text(2)), st.text(3), st.text(4)});
    }
    return out;
  }

 private:
  void migrate() {
    db_.exec(R"SQL(
CREATE TABLE IF NOT EXISTS users(
  user_id TEXT PRIMARY KEY,
  role TEXT NOT NULL CHECK (role IN ('annotator', 'judge')),
  token_sha256 TEXT NOT NULL UNIQUE);
CREATE TABLE IF NOT EXISTS qualifications(
  annotator_id TEXT PRIMARY KEY REFERENCES users(user_id),
  instance_ids TEXT NOT NULL,
  status TEXT NOT NULL CHECK (status IN ('pending', 'passed', 'failed')));
CREATE TABLE IF NOT EXISTS redundancy(
  instance_id TEXT PRIMARY KEY,
  target INTEGER NOT NULL CHECK (target >= 1));
CREATE TABLE IF NOT EXISTS tasks(
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  task_id TEXT NOT NULL UNIQUE,
  kind TEXT NOT NULL CHECK (kind IN ('annotation', 'qualification')),
  instance_id TEXT NOT NULL,
  annotator_id TEXT NOT NULL REFERENCES users(user_id),
  state TEXT NOT NULL CHECK (state IN ('open', 'submitted', 'approved')),
  UNIQUE (kind, instance_id, annotator_id));
CREATE TRIGGER IF NOT EXISTS tasks_forward_only BEFORE UPDATE OF state ON tasks
  WHEN NOT ((OLD.state = 'open' AND NEW.state = 'submitted') OR (OLD.state = 'submitted' AND NEW.state = 'approved'))
  BEGIN SELECT RAISE(ABORT, 'task state may only move open -> submitted -> approved'); END;
CREATE TABLE IF NOT EXISTS annotations(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  task_id TEXT NOT NULL UNIQUE REFERENCES tasks(task_id),
  kind TEXT NOT NULL,
  instance_id TEXT NOT NULL,
  annotator_id TEXT NOT NULL,
  question TEXT NOT NULL,
  target TEXT,
  anchor_index INTEGER NOT NULL,
  is_organizational INTEGER NOT NULL);
CREATE TRIGGER IF NOT EXISTS annotations_no_update BEFORE UPDATE ON annotations
  BEGIN SELECT RAISE(ABORT, 'annotations are append-only'); END;
CREATE TRIGGER IF NOT EXISTS annotations_no_delete BEFORE DELETE ON annotations
  BEGIN SELECT RAISE(ABORT, 'annotations are append-only'); END;
CREATE TABLE IF NOT EXISTS eval_items(
  item_id TEXT PRIMARY KEY,
  kind TEXT NOT NULL CHECK (kind IN ('question', 'ranking')),
  instance_id TEXT NOT NULL,
  payload TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS eval_assignments(
  item_id TEXT NOT NULL REFERENCES eval_items(item_id),
  judge_id TEXT NOT NULL REFERENCES users(user_id),
  PRIMARY KEY (item_id, judge_id));
CREATE TABLE IF NOT EXISTS judgments(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  item_id TEXT NOT NULL REFERENCES eval_items(item_id),
  judge_id TEXT NOT NULL REFERENCES users(user_id),
  reasonable INTEGER NOT NULL,
  answered INTEGER NOT NULL,
  UNIQUE (item_id, judge_id));
CREATE TABLE IF NOT EXISTS rankings(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  item_id TEXT NOT NULL REFERENCES eval_items(item_id),
  judge_id TEXT NOT NULL REFERENCES users(user_id),
  criterion TEXT NOT NULL,
  first_system TEXT NOT NULL,
  second_system TEXT NOT NULL,
  UNIQUE (item_id, judge_id, criterion),
  CHECK (first_system <> second_system));
)SQL");
  }

  std::optional<Task> task_locked(const std::string& task_id) {
    auto st = db_.prepare("SELECT task_id, kind, instance_id, annotator_id, state FROM tasks WHERE task_id = ?");
    st.bind(1, task_id);
    if (!st.step()) return std::nullopt;
    return Task{st.text(0), st.text(1), st.text(2), st.text(3), st.text(4)};
  }

  std::optional<Task> open_task_locked(const std::string& annotator_id, const std::string& kind) {
    auto st = db_.prepare(
        "SELECT task_id, kind, instance_id, annotator_id, state FROM tasks "
        "WHERE annotator_id = ? AND kind = ? AND state = 'open' ORDER BY seq LIMIT 1");
    st.bind(1, annotator_id).bind(2, kind);
    if (!st.step()) return std::nullopt;
    return Task{st.text(0), st.text(1), st.text(2), st.text(3), st.text(4)};
  }

  void insert_task_locked(const Task& t) {
    db_.run("INSERT INTO tasks(task_id, kind, instance_id, annotator_id, state) VALUES (?, ?, ?, ?, 'open')",
            {t.task_id, t.kind, t.instance_id, t.assigned_to});
  }

  std::mutex mu_;
  sql::Database db_;
};

}  // namespace elabqud::service
