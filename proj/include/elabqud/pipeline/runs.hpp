#pragma once

// The batch commands as library calls. Each returns the payload it wrote and
// the output name, so the CLI is a thin shell over these.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "elabqud/analysis/agreement.hpp"
#include "elabqud/analysis/questions.hpp"
#include "elabqud/analysis/relations.hpp"
#include "elabqud/analysis/targets.hpp"
#include "elabqud/elabgen/elabgen.hpp"
#include "elabqud/metrics/bleu.hpp"
#include "elabqud/metrics/similarity.hpp"
#include "elabqud/pipeline/context.hpp"
#include "elabqud/questiongen/config.hpp"
#include "elabqud/questiongen/questiongen.hpp"
#include "elabqud/util/parallel.hpp"

namespace elabqud::pipeline {

struct RunResult {
  std::string output;  // workspace-relative path of the file written
  json payload;
};

inline json empty_report(const std::string& reason) { return {{"empty", true}, {"reason", reason}}; }

// Reports that cannot be computed for lack of data come back as an empty
// marker instead of failing the whole command.
template <class F>
json report_or_empty(F&& f) {
  try {
    return f();
  } catch (const EmptyInputError& e) {
    return empty_report(e.what());
  } catch (const StatisticsError& e) {
    return empty_report(e.what());
  }
}

inline bool in_splits(const Config& c, corpus::Split s) { return c.splits.empty() || c.splits.count(s) > 0; }

// ---- ingest --------------------------------------------------------------------

inline json dataset_summary(const corpus::Dataset& ds) {
  std::map<std::string, std::size_t> by_split;
  for (const auto& i : ds.instances()) ++by_split[std::string(corpus::to_string(i.split))];
  std::size_t organizational = 0, with_question = 0;
  for (const auto& a : ds.annotations()) {
    organizational += a.is_organizational;
    with_question += !corpus::is_blank(a.question);
  }
  return {{"fingerprint", corpus::dataset_fingerprint(ds)},
          {"format_version", ds.format_version()},
          {"documents", ds.documents().size()},
          {"instances", ds.instances().size()},
          {"instances_by_split", by_split},
          {"annotations", ds.annotations().size()},
          {"annotations_with_question", with_question},
          {"organizational_annotations", organizational},
          {"tokenizer", corpus::tokenizer_fingerprint()}};
}

inline RunResult run_ingest(RunContext& ctx) {
  json payload = dataset_summary(ctx.dataset());
  return {ctx.write_output("ingest.json", "dataset", payload), payload};
}

// ---- analyze -------------------------------------------------------------------

inline std::vector<std::pair<std::string, std::string>> load_relation_labels(RunContext& ctx, const std::string& path) {
  json j = ctx.input_json(path, "relation labels");
  if (!j.is_array()) throw ConfigError("relation labels must be an array of {instance_id, label}");
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t n = 0;
  for (const auto& e : j) {
    ++n;
    if (!e.is_object() || !e.contains("instance_id") || !e.contains("label") || !e["instance_id"].is_string() ||
        !e["label"].is_string()) {
      throw ParseError(n, "label", "relation entries need string instance_id and label");
    }
    out.emplace_back(e["instance_id"].get<std::string>(), e["label"].get<std::string>());
  }
  return out;
}

// Target-prediction accuracy against gold targets on the configured splits.
inline json target_prediction_report(RunContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& c = ctx.config();
  std::vector<corpus::TargetSpan> predicted, gold;
  std::size_t clamped = 0;
  for (const auto& ex : questiongen::qg_examples(ds, c.splits)) {
    const auto& doc = ds.document(ex.instance->doc_id);
    auto window = corpus::extract_window(doc, ex.instance->elab_index, c.pre_window, c.post_window);
    auto p = questiongen::predict_target(doc.at(ex.annotation->anchor_index), window, ctx.span_predictor());
    clamped += p.clamped;
    predicted.push_back(p.span);
    gold.push_back(*ex.annotation->target);
  }
  json j = questiongen::span_prediction_metrics(predicted, gold).to_json();
  j["clamped"] = clamped;
  j["backend_id"] = ctx.span_predictor().descriptor().backend_id;
  return j;
}

inline json analysis_reports(RunContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& c = ctx.config();
  json r = json::object();
  r["anchor_agreement"] = report_or_empty([&] { return analysis::anchor_agreement(ds).to_json(); });
  r["question_similarity"] = report_or_empty([&] {
    json j = analysis::pairwise_question_similarity(ds, analysis::embedding_metric(ctx.embedder()), c.seed).to_json();
    j["backend_id"] = ctx.embedder().descriptor().backend_id;
    return j;
  });
  r["question_types"] = report_or_empty([&] {
    json j = analysis::question_type_distribution(analysis::dataset_questions(ds), ctx.classifier()).to_json();
    j["backend_id"] = ctx.classifier().descriptor().backend_id;
    return j;
  });
  r["target_statistics"] = report_or_empty([&] {
    json j = analysis::target_statistics(ds, ctx.tagger()).to_json();
    j["backend_id"] = ctx.tagger().descriptor().backend_id;
    return j;
  });
  r["target_overlap"] = report_or_empty([&] {
    json j = analysis::target_overlap_rate(ds, c.overlap_policy).to_json();
    j["policy"] = c.overlap_policy == analysis::OverlapPolicy::any_token ? "any_token" : "identical_span";
    return j;
  });
  if (c.frequency_lexicon) {
    r["word_frequency"] = report_or_empty([&] {
      auto lex = analysis::FrequencyLexicon::from_tsv(ctx.input_path(*c.frequency_lexicon, "frequency lexicon"));
      return analysis::frequency_test(ds, lex, c.frequency).to_json();
    });
  } else {
    r["word_frequency"] = empty_report("no frequency_lexicon configured");
  }
  if (c.relation_labels) {
    r["relations"] = report_or_empty(
        [&] { return analysis::relation_distribution(load_relation_labels(ctx, *c.relation_labels)).to_json(); });
  } else {
    r["relations"] = empty_report("no relation_labels configured");
  }
  r["target_prediction"] = report_or_empty([&] { return target_prediction_report(ctx); });
  return r;
}

inline RunResult run_analyze(RunContext& ctx) {
  json payload = analysis_reports(ctx);
  return {ctx.write_output("analysis.json", "reports", payload), payload};
}

// ---- generation ----------------------------------------------------------------

inline json records_json(const std::vector<backends::GenerationRecord>& records) {
  json out = json::array();
  for (const auto& r : records) out.push_back(r.to_json());
  return out;
}

inline std::vector<backends::GenerationRecord> generate_questions(RunContext& ctx, const std::string& config_name) {
  const auto& qg = questiongen::find_qg_config(config_name);
  const auto& ds = ctx.dataset();
  const auto& c = ctx.config();
  const auto& delims = ctx.delimiters();
  auto& backend = ctx.generator("question_generation", qg.name);
  auto examples = questiongen::qg_examples(ds, c.splits);
  if (examples.empty()) throw EmptyInputError("no annotated questions in the selected splits");

  // Target prediction runs first and serially; only backend generation fans out.
  std::vector<std::optional<corpus::TargetSpan>> targets;
  std::vector<json> extras;
  for (const auto& ex : examples) {
    const auto& doc = ds.document(ex.instance->doc_id);
    json extra = {{"annotator_id", ex.annotation->annotator_id},
                  {"anchor_index", ex.annotation->anchor_index},
                  {"target_source", questiongen::to_string(qg.target_source)}};
    std::optional<corpus::TargetSpan> target;
    if (qg.target_source == questiongen::TargetSource::gold) {
      target = ex.annotation->target;
    } else if (qg.target_source == questiongen::TargetSource::predicted) {
      auto window = corpus::extract_window(doc, ex.instance->elab_index, c.pre_window, c.post_window);
      auto p = questiongen::predict_target(doc.at(ex.annotation->anchor_index), window, ctx.span_predictor());
      target = p.span;
      extra["target_clamped"] = p.clamped;
    }
    if (target) extra["target"] = corpus::to_json(*target);
    targets.push_back(target);
    extras.push_back(std::move(extra));
  }
  return util::parallel_map<backends::GenerationRecord>(examples.size(), c.max_in_flight, [&](std::size_t i) {
    const auto& ex = examples[i];
    const auto& doc = ds.document(ex.instance->doc_id);
    auto prompt = questiongen::assemble_qg_input(doc, *ex.instance, ex.annotation->anchor_index, qg, targets[i], delims);
    return questiongen::generate_question(prompt, backend, c.question_decode,
                                          {"question", ex.instance->instance_id, qg.name, extras[i]});
  });
}

inline RunResult run_gen_questions(RunContext& ctx, const std::string& config_name) {
  json payload = records_json(generate_questions(ctx, config_name));
  return {ctx.write_output("questions-" + config_name + ".json", "records", payload), payload};
}

// Question records as written by gen-questions.
inline std::vector<backends::GenerationRecord> load_records(RunContext& ctx, const std::string& path) {
  json j = ctx.input_json(path, "records");
  if (!j.is_object() || !j.contains("records") || !j["records"].is_array()) {
    throw ParseError(0, "records", path + ": expected an object with a 'records' array");
  }
  std::vector<backends::GenerationRecord> out;
  std::size_t n = 0;
  for (const auto& r : j["records"]) {
    ++n;
    try {
      out.push_back(backends::GenerationRecord::from_json(r));
    } catch (const json::exception& e) {
      throw ParseError(n, "records", path + ": " + e.what());
    }
  }
  return out;
}

struct ElabItem {
  const corpus::ElaborationInstance* instance = nullptr;
  elabgen::ElabPromptCondition condition;
  std::string system;
  json extra = json::object();
};

// Condition labels: "context_only", "generic", "qud:human" for annotated
// questions, "qud:<QG system>" for generated ones.
inline std::vector<ElabItem> elaboration_items(RunContext& ctx, elabgen::ConditionKind kind,
                                               const std::optional<std::string>& questions_path) {
  const auto& ds = ctx.dataset();
  const auto& c = ctx.config();
  std::vector<ElabItem> items;
  if (kind != elabgen::ConditionKind::qud) {
    if (questions_path) throw ConfigError("--questions only applies to the qud condition");
    for (const auto& inst : ds.instances()) {
      if (in_splits(c, inst.split)) items.push_back({&inst, {kind, std::nullopt}, elabgen::to_string(kind), {}});
    }
    return items;
  }
  if (!questions_path) {
    for (const auto& a : ds.annotations()) {
      if (corpus::is_blank(a.question)) continue;
      const auto& inst = ds.instance(a.instance_id);
      if (!in_splits(c, inst.split)) continue;
      items.push_back({&inst, {kind, a.question}, "qud:human", {{"question_source", "human"},
                                                                 {"annotator_id", a.annotator_id}}});
    }
    return items;
  }
  for (const auto& r : load_records(ctx, *questions_path)) {
    if (r.kind != "question") throw ValidationError("record for '" + r.instance_id + "' is not a question");
    const auto& inst = ds.instance(r.instance_id);
    if (!in_splits(c, inst.split)) continue;
    json extra = {{"question_source", r.system}};
    if (r.extra.contains("annotator_id")) extra["annotator_id"] = r.extra["annotator_id"];
    items.push_back({&inst, {kind, r.text}, "qud:" + r.system, std::move(extra)});
  }
  return items;
}

inline std::vector<backends::GenerationRecord> generate_elaborations(RunContext& ctx, elabgen::ConditionKind kind,
                                                                     const std::optional<std::string>& questions_path) {
  const auto& ds = ctx.dataset();
  const auto& c = ctx.config();
  auto items = elaboration_items(ctx, kind, questions_path);
  if (items.empty()) throw EmptyInputError("nothing to generate for condition " + elabgen::to_string(kind));
  auto& backend = ctx.generator("elaboration_generation");
  return util::parallel_map<backends::GenerationRecord>(items.size(), c.max_in_flight, [&](std::size_t i) {
    const auto& it = items[i];
    const auto& doc = ds.document(it.instance->doc_id);
    auto window = corpus::extract_window(doc, it.instance->elab_index, c.pre_window, c.post_window);
    auto prompt = elabgen::build_elab_prompt(window, it.condition);
    return elabgen::generate_elaboration(prompt, backend, c.elaboration_decode,
                                         {"elaboration", it.instance->instance_id, it.system, it.extra});
  });
}

inline std::string file_label(std::string s) {
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '-';
  }
  return s;
}

inline RunResult run_gen_elabs(RunContext& ctx, elabgen::ConditionKind kind,
                               const std::optional<std::string>& questions_path,
                               const std::optional<std::string>& output_name = std::nullopt) {
  auto records = generate_elaborations(ctx, kind, questions_path);
  std::string name = output_name.value_or("");
  if (name.empty()) {
    std::set<std::string> systems;
    for (const auto& r : records) systems.insert(r.system);
    name = "elabs-" + file_label(systems.size() == 1 ? *systems.begin() : elabgen::to_string(kind) + ":mixed") + ".json";
  }
  json payload = records_json(records);
  return {ctx.write_output(name, "records", payload), payload};
}

// ---- evaluate ------------------------------------------------------------------

struct MetricRow {
  std::string kind;
  std::string system;
  std::size_t n = 0;
  double corpus_bleu4 = 0.0;
  double mean_sentence_bleu4 = 0.0;
  metrics::ScorePair similarity;  // means over items
  std::set<std::string> backend_ids;

  json to_json() const {
    return {{"kind", kind},
            {"system", system},
            {"n", n},
            {"bleu4", corpus_bleu4},
            {"mean_sentence_bleu4", mean_sentence_bleu4},
            {"similarity_raw", similarity.raw},
            {"similarity_rescaled", similarity.rescaled},
            {"backend_ids", backend_ids}};
  }
};

// References: for a question, every annotated question on its instance; for an
// elaboration, the gold elaboration sentence.
inline std::vector<std::string> references_for(const corpus::Dataset& ds, const backends::GenerationRecord& r) {
  const auto& inst = ds.instance(r.instance_id);
  if (r.kind == "elaboration") return {ds.document(inst.doc_id).at(inst.elab_index).text};
  if (r.kind != "question") throw ValidationError("record kind must be question or elaboration, got '" + r.kind + "'");
  std::vector<std::string> refs;
  for (const auto& a : ds.annotations()) {
    if (a.instance_id == r.instance_id && !corpus::is_blank(a.question)) refs.push_back(a.question);
  }
  if (refs.empty()) throw AlignmentError("no annotated question for instance '" + r.instance_id + "'");
  return refs;
}

inline MetricRow score_group(const corpus::Dataset& ds, const std::string& kind, const std::string& system,
                             const std::vector<const backends::GenerationRecord*>& records,
                             backends::EmbeddingBackend& embedder, const metrics::BleuOptions& bleu) {
  MetricRow row;
  row.kind = kind;
  row.system = system;
  row.n = records.size();
  std::vector<metrics::Tokens> cands;
  std::vector<std::vector<metrics::Tokens>> refs;
  for (const auto* r : records) {
    auto ref_text = references_for(ds, *r);
    std::vector<metrics::Tokens> ref_tokens;
    for (const auto& t : ref_text) ref_tokens.push_back(corpus::tokenize(t));
    auto cand = corpus::tokenize(r->text);
    row.mean_sentence_bleu4 += metrics::bleu4(cand, ref_tokens, bleu);
    auto s = metrics::embedding_similarity_max(r->text, ref_text, embedder, embedder.baseline());
    row.similarity.raw += s.raw;
    row.similarity.rescaled += s.rescaled;
    row.backend_ids.insert(r->backend_id);
    cands.push_back(std::move(cand));
    refs.push_back(std::move(ref_tokens));
  }
  double n = static_cast<double>(row.n);
  row.mean_sentence_bleu4 /= n;
  row.similarity.raw /= n;
  row.similarity.rescaled /= n;
  row.corpus_bleu4 = metrics::corpus_bleu4(cands, refs, bleu);
  return row;
}

// Canonical row order: the five QG systems, then context_only, generic,
// qud:human, qud:<QG system>; anything else sorts after, alphabetically.
inline int system_rank(const std::string& s) {
  static const std::vector<std::string> order = [] {
    std::vector<std::string> o;
    for (const auto& q : questiongen::qg_configs()) o.push_back(q.name);
    o.push_back("context_only");
    o.push_back("generic");
    o.push_back("qud:human");
    for (const auto& q : questiongen::qg_configs()) o.push_back("qud:" + q.name);
    return o;
  }();
  auto it = std::find(order.begin(), order.end(), s);
  return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

inline json evaluate_records(RunContext& ctx, const std::vector<backends::GenerationRecord>& records) {
  const auto& ds = ctx.dataset();
  std::map<std::pair<std::string, std::string>, std::vector<const backends::GenerationRecord*>> groups;
  for (const auto& r : records) groups[{r.kind, r.system}].push_back(&r);
  if (groups.empty()) throw EmptyInputError("no generation records to evaluate");
  std::vector<MetricRow> rows;
  for (const auto& [key, recs] : groups) {
    rows.push_back(score_group(ds, key.first, key.second, recs, ctx.embedder(), ctx.config().bleu));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
    int ra = system_rank(a.system), rb = system_rank(b.system);
    return ra != rb ? ra < rb : a.system < b.system;
  });
  json questions = json::array(), elaborations = json::array();
  for (const auto& row : rows) (row.kind == "question" ? questions : elaborations).push_back(row.to_json());
  return {{"questions", questions},
          {"elaborations", elaborations},
          {"embedding_backend", ctx.embedder().descriptor().backend_id},
          {"bleu", {{"smoothing", std::string(metrics::to_string(ctx.config().bleu.smoothing))},
                    {"k", ctx.config().bleu.k}}}};
}

// Record files default to every questions-*.json and elabs-*.json in the
// output directory, in name order.
inline std::vector<std::string> default_record_files(const Config& c) {
  std::vector<std::string> out;
  fs::path dir = c.resolve(c.output_dir);
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    bool records = name.rfind("questions-", 0) == 0 || name.rfind("elabs-", 0) == 0;
    if (records && e.path().extension() == ".json") out.push_back((fs::path(c.output_dir) / name).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline RunResult run_evaluate(RunContext& ctx, std::vector<std::string> files) {
  if (files.empty()) files = default_record_files(ctx.config());
  if (files.empty()) throw EmptyInputError("no record files to evaluate");
  std::vector<backends::GenerationRecord> records;
  for (const auto& f : files) {
    for (auto& r : load_records(ctx, f)) records.push_back(std::move(r));
  }
  json payload = evaluate_records(ctx, records);
  return {ctx.write_output("evaluation.json", "tables", payload), payload};
}

}  // namespace elabqud::pipeline
