#pragma once

// Loads the golden prompt fixture set under tests/fixtures/prompts.

#include <fstream>
#include <sstream>
#include <string>

#include "elabqud/corpus/dataset.hpp"
#include "elabqud/corpus/window.hpp"

namespace elabqud::synth {

struct PromptFixture {
  corpus::Document doc;
  corpus::ElaborationInstance instance;
  int anchor_index = 0;
  corpus::TargetSpan gold_target;
  corpus::TargetSpan predicted_target;
  std::string question;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline PromptFixture load_prompt_fixture(const std::string& dir) {
  auto j = nlohmann::json::parse(read_file(dir + "/fixture_document.json"));
  PromptFixture f;
  f.doc.doc_id = j["doc_id"].get<std::string>();
  for (const auto& s : j["sentences"]) {
    f.doc.sentences.push_back({s["index"].get<int>(), s["text"].get<std::string>(), s["is_elaboration"].get<bool>()});
  }
  int e = j["elab_index"].get<int>();
  f.instance = {"fixture", f.doc.doc_id, e, corpus::extract_window(f.doc, e), corpus::Split::test};
  f.anchor_index = j["anchor_index"].get<int>();
  const auto& anchor = f.doc.at(f.anchor_index);
  f.gold_target = corpus::make_span(anchor, j["gold_target"]["start_token"].get<int>(),
                                    j["gold_target"]["end_token"].get<int>());
  f.predicted_target = corpus::make_span(anchor, j["predicted_target"]["start_token"].get<int>(),
                                         j["predicted_target"]["end_token"].get<int>());
  f.question = j["question"].get<std::string>();
  return f;
}

}  // namespace elabqud::synth
