#pragma once

#include <boost/tokenizer.hpp>

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "elabqud/errors.hpp"
#include "json.hpp"

namespace elabqud::metrics {

using nlohmann::json;

struct HumanQuestionJudgment {
  std::string question_id;
  std::string judge_id;
  bool reasonable = false;  // reasonable to ask given the context so far
  bool answered = false;    // answered by the elaboration
};

enum class RankCriterion { elaboration_like, coherence };

inline std::string to_string(RankCriterion c) {
  return c == RankCriterion::elaboration_like ? "elaboration_like" : "coherence";
}

inline RankCriterion parse_criterion(const std::string& s) {
  if (s == "elaboration_like") return RankCriterion::elaboration_like;
  if (s == "coherence") return RankCriterion::coherence;
  throw ValidationError("unknown ranking criterion '" + s + "'");
}

struct ElabRanking {
  std::string instance_id;
  std::string judge_id;
  RankCriterion criterion = RankCriterion::elaboration_like;
  std::string first;
  std::string second;
};

struct SystemJudgmentTally {
  std::size_t n = 0;
  std::size_t reasonable_yes = 0;
  std::size_t answered_yes = 0;

  double reasonable_rate() const { return n ? static_cast<double>(reasonable_yes) / static_cast<double>(n) : 0.0; }
  double answered_rate() const { return n ? static_cast<double>(answered_yes) / static_cast<double>(n) : 0.0; }
};

struct JudgmentTally {
  std::map<std::string, SystemJudgmentTally> per_system;
  double reasonable_agreement = 0.0;  // pairwise judge agreement, criterion 1
  double answered_agreement = 0.0;    // criterion 2
  std::size_t agreement_items = 0;    // questions seen by >= 2 judges

  json to_json() const {
    json systems = json::object();
    for (const auto& [sys, t] : per_system) {
      systems[sys] = {{"n", t.n},
                      {"reasonable_yes_pct", 100.0 * t.reasonable_rate()},
                      {"reasonable_no_pct", t.n ? 100.0 - 100.0 * t.reasonable_rate() : 0.0},
                      {"answered_yes_pct", 100.0 * t.answered_rate()},
                      {"answered_no_pct", t.n ? 100.0 - 100.0 * t.answered_rate() : 0.0}};
    }
    return {{"systems", systems},
            {"agreement", {{"reasonable", reasonable_agreement}, {"answered", answered_agreement},
                           {"items", agreement_items}}}};
  }
};

// `system_of` maps question_id to the system that produced the question.
inline JudgmentTally tally_question_judgments(const std::vector<HumanQuestionJudgment>& judgments,
                                              const std::map<std::string, std::string>& system_of) {
  JudgmentTally out;
  std::map<std::string, std::vector<const HumanQuestionJudgment*>> by_question;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& j : judgments) {
    if (!seen.emplace(j.question_id, j.judge_id).second) {
      throw IntegrityError("duplicate judgment of '" + j.question_id + "' by '" + j.judge_id + "'");
    }
    auto sys = system_of.find(j.question_id);
    if (sys == system_of.end()) throw IntegrityError("judged question '" + j.question_id + "' has no system");
    auto& t = out.per_system[sys->second];
    ++t.n;
    t.reasonable_yes += j.reasonable ? 1 : 0;
    t.answered_yes += j.answered ? 1 : 0;
    by_question[j.question_id].push_back(&j);
  }
  std::size_t pairs = 0, agree_r = 0, agree_a = 0;
  for (const auto& [q, js] : by_question) {
    if (js.size() < 2) continue;
    ++out.agreement_items;
    for (std::size_t a = 0; a < js.size(); ++a) {
      for (std::size_t b = a + 1; b < js.size(); ++b) {
        ++pairs;
        agree_r += js[a]->reasonable == js[b]->reasonable ? 1 : 0;
        agree_a += js[a]->answered == js[b]->answered ? 1 : 0;
      }
    }
  }
  if (pairs > 0) {
    out.reasonable_agreement = static_cast<double>(agree_r) / static_cast<double>(pairs);
    out.answered_agreement = static_cast<double>(agree_a) / static_cast<double>(pairs);
  }
  return out;
}

struct RankCounts {
  std::size_t first = 0;
  std::size_t second = 0;
};

struct RankingTally {
  // criterion -> system -> counts
  std::map<std::string, std::map<std::string, RankCounts>> counts;
  std::map<std::string, std::size_t> totals;  // rankings per criterion

  json to_json() const {
    json out = json::object();
    for (const auto& [crit, systems] : counts) {
      json c = json::object();
      double total = static_cast<double>(totals.at(crit));
      for (const auto& [sys, rc] : systems) {
        c[sys] = {{"first", rc.first},
                  {"second", rc.second},
                  {"first_pct", 100.0 * static_cast<double>(rc.first) / total},
                  {"second_pct", 100.0 * static_cast<double>(rc.second) / total}};
      }
      out[crit] = {{"total", totals.at(crit)}, {"systems", c}};
    }
    return out;
  }
};

inline RankingTally tally_rankings(const std::vector<ElabRanking>& rankings) {
  RankingTally out;
  std::set<std::tuple<std::string, std::string, RankCriterion>> seen;
  for (const auto& r : rankings) {
    if (r.first == r.second) throw ValidationError("ranking on '" + r.instance_id + "' picks the same system twice");
    if (!seen.emplace(r.instance_id, r.judge_id, r.criterion).second) {
      throw IntegrityError("duplicate ranking of '" + r.instance_id + "' by '" + r.judge_id + "' for " +
                           to_string(r.criterion));
    }
    auto crit = to_string(r.criterion);
    ++out.totals[crit];
    ++out.counts[crit][r.first].first;
    ++out.counts[crit][r.second].second;
  }
  return out;
}

// ---- CSV import ----------------------------------------------------------------

namespace detail {

using CsvRow = std::map<std::string, std::string>;

inline std::vector<CsvRow> read_csv(const std::string& path, const std::vector<std::string>& required) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open CSV '" + path + "'");
  using Tok = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::string line;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    try {
      Tok tok(line);
      cells.assign(tok.begin(), tok.end());
    } catch (const boost::escaped_list_error& e) {
      throw ParseError(n, "<csv>", e.what());
    }
    if (header.empty()) {
      header = cells;
      for (const auto& r : required) {
        if (std::find(header.begin(), header.end(), r) == header.end()) throw ParseError(n, r, "missing CSV column");
      }
      continue;
    }
    if (cells.size() != header.size()) throw ParseError(n, "<csv>", "wrong number of cells");
    CsvRow row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = cells[i];
    row["__line"] = std::to_string(n);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline bool parse_yes_no(const CsvRow& row, const std::string& field) {
  std::string v = row.at(field);
  for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "yes" || v == "y" || v == "true" || v == "1") return true;
  if (v == "no" || v == "n" || v == "false" || v == "0") return false;
  throw ParseError(std::stoul(row.at("__line")), field, "expected yes/no");
}

}  // namespace detail

struct JudgmentFile {
  std::vector<HumanQuestionJudgment> judgments;
  std::map<std::string, std::string> system_of;  // filled from an optional system_id column
};

// Columns: question_id, judge_id, reasonable, answered[, system_id].
inline JudgmentFile read_judgments_csv(const std::string& path) {
  JudgmentFile out;
  for (const auto& row : detail::read_csv(path, {"question_id", "judge_id", "reasonable", "answered"})) {
    out.judgments.push_back({row.at("question_id"), row.at("judge_id"), detail::parse_yes_no(row, "reasonable"),
                             detail::parse_yes_no(row, "answered")});
    if (auto it = row.find("system_id"); it != row.end()) out.system_of[row.at("question_id")] = it->second;
  }
  return out;
}

// Columns: instance_id, judge_id, criterion, first, second.
inline std::vector<ElabRanking> read_rankings_csv(const std::string& path) {
  std::vector<ElabRanking> out;
  for (const auto& row : detail::read_csv(path, {"instance_id", "judge_id", "criterion", "first", "second"})) {
    RankCriterion c;
    try {
      c = parse_criterion(row.at("criterion"));
    } catch (const ValidationError& e) {
      throw ParseError(std::stoul(row.at("__line")), "criterion", e.what());
    }
    out.push_back({row.at("instance_id"), row.at("judge_id"), c, row.at("first"), row.at("second")});
  }
  return out;
}

}  // namespace elabqud::metrics
