#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "elabqud/corpus/types.hpp"
#include "elabqud/corpus/window.hpp"
#include "elabqud/util/hash.hpp"
#include "json.hpp"

namespace elabqud::corpus {

using nlohmann::json;

inline constexpr std::string_view kFormatVersion = "elabqud-jsonl/1";

// Documents, their marked elaborations, and human QUD annotations, with every
// cross-reference checked on insertion. Objects are immutable once added.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::string format_version) : format_version_(std::move(format_version)) {}

  const std::string& format_version() const { return format_version_; }
  const std::vector<Document>& documents() const { return documents_; }
  const std::vector<ElaborationInstance>& instances() const { return instances_; }
  const std::vector<QUDAnnotation>& annotations() const { return annotations_; }

  const Document& add_document(Document doc) {
    validate(doc);
    if (doc_index_.count(doc.doc_id)) throw IntegrityError("duplicate doc_id '" + doc.doc_id + "'");
    doc_index_[doc.doc_id] = documents_.size();
    documents_.push_back(std::move(doc));
    return documents_.back();
  }

  const ElaborationInstance& add_instance(const std::string& instance_id, const std::string& doc_id, int elab_index,
                                          Split split) {
    if (instance_id.empty()) throw IntegrityError("instance has empty instance_id");
    if (instance_index_.count(instance_id)) throw IntegrityError("duplicate instance_id '" + instance_id + "'");
    const Document& doc = document(doc_id);
    if (!doc.contains(elab_index)) {
      throw IntegrityError("instance '" + instance_id + "': elab_index " + std::to_string(elab_index) +
                           " outside document '" + doc_id + "'");
    }
    if (!doc.at(elab_index).is_elaboration) {
      throw IntegrityError("instance '" + instance_id + "': sentence " + std::to_string(elab_index) +
                           " is not marked as an elaboration");
    }
    ElaborationInstance inst{instance_id, doc_id, elab_index, extract_window(doc, elab_index), split};
    instance_index_[instance_id] = instances_.size();
    instances_.push_back(std::move(inst));
    return instances_.back();
  }

  // Validates and completes the annotation (target surface_text is recomputed).
  const QUDAnnotation& add_annotation(QUDAnnotation a) {
    const ElaborationInstance& inst = instance(a.instance_id);
    const Document& doc = document(inst.doc_id);
    if (!doc.contains(a.anchor_index)) {
      throw IntegrityError("annotation by '" + a.annotator_id + "' on '" + a.instance_id + "': anchor_index " +
                           std::to_string(a.anchor_index) + " outside document '" + doc.doc_id + "'");
    }
    if (a.annotator_id.empty()) throw IntegrityError("annotation on '" + a.instance_id + "' has no annotator_id");
    if (!a.is_organizational && is_blank(a.question)) {
      throw IntegrityError("annotation by '" + a.annotator_id + "' on '" + a.instance_id +
                           "': question is empty and the sentence is not flagged organizational");
    }
    if (a.target) {
      if (!doc.contains(a.target->sentence_index)) {
        throw IntegrityError("annotation on '" + a.instance_id + "': target sentence " +
                             std::to_string(a.target->sentence_index) + " outside document");
      }
      a.target = make_span(doc.at(a.target->sentence_index), a.target->start_token, a.target->end_token);
    } else if (!a.is_organizational) {
      throw IntegrityError("annotation by '" + a.annotator_id + "' on '" + a.instance_id + "' has no target");
    }
    annotations_.push_back(std::move(a));
    return annotations_.back();
  }

  bool has_document(const std::string& id) const { return doc_index_.count(id) > 0; }
  bool has_instance(const std::string& id) const { return instance_index_.count(id) > 0; }

  const Document& document(const std::string& id) const {
    auto it = doc_index_.find(id);
    if (it == doc_index_.end()) throw IntegrityError("unknown doc_id '" + id + "'");
    return documents_[it->second];
  }

  const ElaborationInstance& instance(const std::string& id) const {
    auto it = instance_index_.find(id);
    if (it == instance_index_.end()) throw IntegrityError("unknown instance_id '" + id + "'");
    return instances_[it->second];
  }

  // Annotations grouped by instance_id, in insertion order within each group.
  std::map<std::string, std::vector<const QUDAnnotation*>> annotations_by_instance() const {
    std::map<std::string, std::vector<const QUDAnnotation*>> out;
    for (const auto& a : annotations_) out[a.instance_id].push_back(&a);
    return out;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.format_version_ == b.format_version_ && a.documents_ == b.documents_ && a.instances_ == b.instances_ &&
           a.annotations_ == b.annotations_;
  }

 private:
  std::string format_version_{kFormatVersion};
  std::vector<Document> documents_;
  std::vector<ElaborationInstance> instances_;
  std::vector<QUDAnnotation> annotations_;
  std::map<std::string, std::size_t> doc_index_;
  std::map<std::string, std::size_t> instance_index_;
};

// ---- JSON encoding --------------------------------------------------------

inline json to_json(const Document& d) {
  json sentences = json::array();
  for (const auto& s : d.sentences) {
    sentences.push_back({{"index", s.index}, {"text", s.text}, {"is_elaboration", s.is_elaboration}});
  }
  json j = {{"kind", "document"}, {"doc_id", d.doc_id}, {"sentences", std::move(sentences)}};
  if (d.source_level) j["source_level"] = *d.source_level;
  return j;
}

inline json to_json(const ElaborationInstance& i) {
  return {{"kind", "instance"},
          {"instance_id", i.instance_id},
          {"doc_id", i.doc_id},
          {"elab_index", i.elab_index},
          {"split", std::string(to_string(i.split))}};
}

inline json to_json(const TargetSpan& t) {
  return {{"sentence_index", t.sentence_index}, {"start_token", t.start_token}, {"end_token", t.end_token}};
}

inline json to_json(const QUDAnnotation& a) {
  json j = {{"kind", "annotation"},
            {"instance_id", a.instance_id},
            {"annotator_id", a.annotator_id},
            {"question", a.question},
            {"target", a.target ? to_json(*a.target) : json(nullptr)},
            {"anchor_index", a.anchor_index},
            {"is_organizational", a.is_organizational}};
  if (a.timestamp) j["timestamp"] = *a.timestamp;
  return j;
}

// Canonical form: header line, then documents, instances, annotations in
// insertion order; one sorted-key compact JSON object per line.
inline std::string serialize_dataset(const Dataset& ds) {
  std::string out = json{{"kind", "header"}, {"format_version", ds.format_version()}}.dump() + "\n";
  for (const auto& d : ds.documents()) out += to_json(d).dump() + "\n";
  for (const auto& i : ds.instances()) out += to_json(i).dump() + "\n";
  for (const auto& a : ds.annotations()) out += to_json(a).dump() + "\n";
  return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write dataset to '" + path + "'");
  f << serialize_dataset(ds);
  if (!f) throw ConfigError("write failed for '" + path + "'");
}

inline std::string dataset_fingerprint(const Dataset& ds) { return util::sha256_hex(serialize_dataset(ds)); }

// ---- JSON decoding --------------------------------------------------------

namespace detail {

inline const json& field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(line, name, "missing required field");
  return *it;
}

inline std::string get_string(const json& obj, const char* name, std::size_t line) {
  const json& v = field(obj, name, line);
  if (!v.is_string()) throw ParseError(line, name, "expected string");
  return v.get<std::string>();
}

inline int get_int(const json& obj, const char* name, std::size_t line) {
  const json& v = field(obj, name, line);
  if (!v.is_number_integer()) throw ParseError(line, name, "expected integer");
  return v.get<int>();
}

inline bool get_bool(const json& obj, const char* name, std::size_t line) {
  const json& v = field(obj, name, line);
  if (!v.is_boolean()) throw ParseError(line, name, "expected boolean");
  return v.get<bool>();
}

inline std::optional<std::string> get_optional_string(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(line, name, "expected string");
  return it->get<std::string>();
}

inline Document parse_document(const json& j, std::size_t line) {
  Document d;
  d.doc_id = get_string(j, "doc_id", line);
  d.source_level = get_optional_string(j, "source_level", line);
  const json& sentences = field(j, "sentences", line);
  if (!sentences.is_array()) throw ParseError(line, "sentences", "expected array");
  for (const auto& s : sentences) {
    if (!s.is_object()) throw ParseError(line, "sentences", "expected array of objects");
    d.sentences.push_back({get_int(s, "index", line), get_string(s, "text", line), get_bool(s, "is_elaboration", line)});
  }
  return d;
}

inline QUDAnnotation parse_annotation(const json& j, std::size_t line) {
  QUDAnnotation a;
  a.instance_id = get_string(j, "instance_id", line);
  a.annotator_id = get_string(j, "annotator_id", line);
  a.question = get_string(j, "question", line);
  a.anchor_index = get_int(j, "anchor_index", line);
  a.is_organizational = get_bool(j, "is_organizational", line);
  a.timestamp = get_optional_string(j, "timestamp", line);
  auto it = j.find("target");
  if (it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError(line, "target", "expected object or null");
    TargetSpan t;
    t.sentence_index = get_int(*it, "sentence_index", line);
    t.start_token = get_int(*it, "start_token", line);
    t.end_token = get_int(*it, "end_token", line);
    a.target = t;
  }
  return a;
}

template <typename F>
auto at_line(std::size_t line, F&& f) {
  try {
    return f();
  } catch (const IntegrityError& e) {
    throw IntegrityError("line " + std::to_string(line) + ": " + e.what());
  } catch (const RangeError& e) {
    throw IntegrityError("line " + std::to_string(line) + ": " + e.what());
  }
}

}  // namespace detail

inline Dataset parse_dataset(std::istream& in, std::string_view expected_version = kFormatVersion) {
  struct Pending {
    std::size_t line;
    json obj;
  };
  std::vector<Pending> docs, insts, anns;
  std::string text;
  std::size_t line = 0;
  std::optional<std::string> version;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (is_blank(text)) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, "<json>", e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "<json>", "expected a JSON object");
    if (!version) {
      if (line != 1 || !obj.contains("format_version")) {
        throw ParseError(line, "format_version", "a format_version header object is required on line 1");
      }
      version = detail::get_string(obj, "format_version", line);
      if (*version != expected_version) {
        throw ParseError(line, "format_version",
                         "unsupported version '" + *version + "', expected '" + std::string(expected_version) + "'");
      }
      continue;
    }
    std::string kind = detail::get_string(obj, "kind", line);
    if (kind == "document") {
      docs.push_back({line, std::move(obj)});
    } else if (kind == "instance") {
      insts.push_back({line, std::move(obj)});
    } else if (kind == "annotation") {
      anns.push_back({line, std::move(obj)});
    } else {
      throw ParseError(line, "kind", "unknown kind '" + kind + "'");
    }
  }
  if (!version) throw ParseError(1, "format_version", "empty dataset file");

  Dataset ds(*version);
  for (const auto& p : docs) {
    auto d = detail::parse_document(p.obj, p.line);
    detail::at_line(p.line, [&] { return &ds.add_document(std::move(d)); });
  }
  for (const auto& p : insts) {
    auto id = detail::get_string(p.obj, "instance_id", p.line);
    auto doc_id = detail::get_string(p.obj, "doc_id", p.line);
    int elab = detail::get_int(p.obj, "elab_index", p.line);
    auto split_name = detail::get_string(p.obj, "split", p.line);
    auto split = parse_split(split_name);
    if (!split) throw ParseError(p.line, "split", "expected train, validation or test, got '" + split_name + "'");
    detail::at_line(p.line, [&] { return &ds.add_instance(id, doc_id, elab, *split); });
  }
  for (const auto& p : anns) {
    auto a = detail::parse_annotation(p.obj, p.line);
    detail::at_line(p.line, [&] { return &ds.add_annotation(std::move(a)); });
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path, std::string_view format_version = kFormatVersion) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open dataset '" + path + "'");
  return parse_dataset(f, format_version);
}

}  // namespace elabqud::corpus
