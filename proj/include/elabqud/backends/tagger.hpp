#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "elabqud/backends/descriptor.hpp"

namespace elabqud::backends {

// Part-of-speech tagger over canonical tokens; tags use the Penn Treebank set.
class TaggerBackend {
 public:
  virtual ~TaggerBackend() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::vector<std::string> tag(const std::vector<std::string>& tokens) = 0;
};

inline bool is_verb_tag(std::string_view tag) { return tag.substr(0, 2) == "VB" || tag == "MD"; }
inline bool is_proper_noun_tag(std::string_view tag) { return tag == "NNP" || tag == "NNPS"; }
inline bool is_noun_tag(std::string_view tag) { return tag.substr(0, 2) == "NN"; }

// Lexicon lookup (exact, then lowercased) with suffix and capitalization
// heuristics for unknown words. A small closed-class lexicon is built in.
class LexiconTagger : public TaggerBackend {
 public:
  explicit LexiconTagger(std::map<std::string, std::string> lexicon = {}) : lexicon_(builtin()) {
    for (auto& [w, t] : lexicon) lexicon_[w] = t;
    json lex = json::object();
    for (const auto& [w, t] : lexicon_) lex[w] = t;
    descriptor_ = BackendDescriptor::make(BackendKind::tagger, std::nullopt,
                                          {{"type", "lexicon"}, {"lexicon_sha256", util::sha256_hex(lex.dump())}});
  }

  // Two-column TSV: word, tag.
  static LexiconTagger from_tsv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open tagger lexicon '" + path + "'");
    std::map<std::string, std::string> lex;
    std::string line;
    std::size_t n = 0;
    while (std::getline(f, line)) {
      ++n;
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError(n, "tag", "expected word<TAB>tag");
      lex[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return LexiconTagger(std::move(lex));
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::vector<std::string> tag(const std::vector<std::string>& tokens) override {
    std::vector<std::string> tags;
    tags.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) tags.push_back(tag_one(tokens[i], i == 0));
    return tags;
  }

 private:
  std::string tag_one(const std::string& tok, bool sentence_initial) const {
    if (auto it = lexicon_.find(tok); it != lexicon_.end()) return it->second;
    std::string lower;
    for (char c : tok) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (auto it = lexicon_.find(lower); it != lexicon_.end()) return it->second;
    auto ends = [&](std::string_view suf) {
      return lower.size() > suf.size() + 1 && lower.compare(lower.size() - suf.size(), suf.size(), suf) == 0;
    };
    bool has_alpha = false, has_digit = false;
    for (char c : tok) {
      has_alpha |= std::isalpha(static_cast<unsigned char>(c)) != 0;
      has_digit |= std::isdigit(static_cast<unsigned char>(c)) != 0;
    }
    if (has_digit && std::isdigit(static_cast<unsigned char>(tok[0]))) return "CD";
    if (!has_alpha) return tok.size() == 1 ? tok : "SYM";
    bool capital = std::isupper(static_cast<unsigned char>(tok[0])) != 0;
    if (capital && !sentence_initial) return ends("s") && lower.size() > 4 ? "NNPS" : "NNP";
    if (ends("ing")) return "VBG";
    if (ends("ed")) return "VBD";
    if (ends("ly")) return "RB";
    if (ends("s") && !ends("ss") && !ends("us")) return "NNS";
    if (capital) return "NNP";
    return "NN";
  }

  static std::map<std::string, std::string> builtin() {
    std::map<std::string, std::string> m;
    for (auto w : {"the", "a", "an", "this", "that", "these", "those", "some", "any", "every", "each", "no"}) m[w] = "DT";
    for (auto w : {"in", "on", "at", "of", "for", "with", "by", "from", "about", "into", "over", "after", "before",
                   "under", "between", "through", "during", "without", "near", "above", "like"})
      m[w] = "IN";
    for (auto w : {"and", "or", "but", "nor", "yet"}) m[w] = "CC";
    for (auto w : {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them"}) m[w] = "PRP";
    for (auto w : {"my", "your", "his", "its", "our", "their"}) m[w] = "PRP$";
    m["is"] = "VBZ";
    m["are"] = m["am"] = "VBP";
    for (auto w : {"was", "were", "did", "had", "said", "went", "got", "made", "grew", "flew", "began", "took", "came"})
      m[w] = "VBD";
    for (auto w : {"be", "do", "have", "get", "go", "make", "take", "help", "play", "explain", "copy", "fire"}) m[w] = "VB";
    for (auto w : {"has", "does", "gets", "goes", "makes"}) m[w] = "VBZ";
    for (auto w : {"been", "done", "gone", "known", "seen", "given"}) m[w] = "VBN";
    for (auto w : {"can", "could", "will", "would", "should", "may", "might", "must", "shall"}) m[w] = "MD";
    for (auto w : {"not", "very", "often", "also", "never", "always", "too", "up", "around"}) m[w] = "RB";
    for (auto w : {"what", "who", "which", "whom"}) m[w] = "WP";
    for (auto w : {"why", "how", "when", "where"}) m[w] = "WRB";
    m["to"] = "TO";
    m["there"] = "EX";
    m["'s"] = "POS";
    for (auto w : {".", "?", "!"}) m[w] = ".";
    m[","] = ",";
    m[":"] = ":";
    m[";"] = ":";
    m["("] = "-LRB-";
    m[")"] = "-RRB-";
    m["\""] = "''";
    m["'"] = "''";
    return m;
  }

  std::map<std::string, std::string> lexicon_;
  BackendDescriptor descriptor_;
};

// Returns a fixed tag sequence per token sequence; test stub.
class ScriptedTagger : public TaggerBackend {
 public:
  explicit ScriptedTagger(std::map<std::vector<std::string>, std::vector<std::string>> script)
      : script_(std::move(script)),
        descriptor_(BackendDescriptor::make(BackendKind::tagger, std::nullopt, {{"type", "scripted"}})) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::vector<std::string> tag(const std::vector<std::string>& tokens) override {
    auto it = script_.find(tokens);
    if (it == script_.end()) throw BackendError("scripted tagger: unscripted sentence");
    return it->second;
  }

 private:
  std::map<std::vector<std::string>, std::vector<std::string>> script_;
  BackendDescriptor descriptor_;
};

}  // namespace elabqud::backends
