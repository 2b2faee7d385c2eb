#pragma once

// Brute-force recomputation of the corpus statistics for tests. Written
// against the raw dataset without any of the library's analysis helpers.

#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "elabqud/backends/classifier.hpp"
#include "elabqud/backends/tagger.hpp"
#include "elabqud/corpus/dataset.hpp"

namespace oracle {

using elabqud::corpus::Dataset;
using elabqud::corpus::QUDAnnotation;

inline std::vector<std::string> target_tokens(const Dataset& d, const QUDAnnotation& a) {
  const auto& inst = d.instance(a.instance_id);
  const auto& doc = d.document(inst.doc_id);
  auto toks = elabqud::corpus::tokenize(doc.sentences.at(static_cast<std::size_t>(a.target->sentence_index)).text);
  return {toks.begin() + a.target->start_token, toks.begin() + a.target->end_token};
}

struct TargetOracle {
  double mean = 0, std = 0, verb = 0, proper = 0;
  std::map<std::string, std::size_t> hist;
};

inline TargetOracle targets(const Dataset& d, elabqud::backends::TaggerBackend& tagger) {
  TargetOracle o;
  double n = 0, sum = 0, sumsq = 0, verbs = 0, propers = 0;
  for (const auto& a : d.annotations()) {
    if (!a.target) continue;
    const auto& doc = d.document(d.instance(a.instance_id).doc_id);
    auto tags = tagger.tag(elabqud::corpus::tokenize(doc.sentences.at(static_cast<std::size_t>(a.target->sentence_index)).text));
    bool v = false, p = false;
    for (int i = a.target->start_token; i < a.target->end_token; ++i) {
      const std::string& t = tags[static_cast<std::size_t>(i)];
      o.hist[t] += 1;
      if (t.rfind("VB", 0) == 0 || t == "MD") v = true;
      if (t == "NNP" || t == "NNPS") p = true;
    }
    double len = a.target->end_token - a.target->start_token;
    n += 1;
    sum += len;
    sumsq += len * len;
    verbs += v;
    propers += p;
  }
  o.mean = sum / n;
  o.std = std::sqrt(std::max(0.0, sumsq / n - o.mean * o.mean));
  o.verb = verbs / n;
  o.proper = propers / n;
  return o;
}

inline double overlap_rate(const Dataset& d) {
  std::set<std::string> ids;
  for (const auto& a : d.annotations()) ids.insert(a.instance_id);
  double pairs = 0, hits = 0;
  for (const auto& id : ids) {
    std::vector<const QUDAnnotation*> g;
    for (const auto& a : d.annotations()) {
      if (a.instance_id == id && a.target) g.push_back(&a);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (j <= i) continue;
        pairs += 1;
        if (g[i]->target->sentence_index != g[j]->target->sentence_index) continue;
        std::set<int> pos;
        for (int k = g[i]->target->start_token; k < g[i]->target->end_token; ++k) pos.insert(k);
        bool shared = false;
        for (int k = g[j]->target->start_token; k < g[j]->target->end_token; ++k) shared |= pos.count(k) > 0;
        hits += shared;
      }
    }
  }
  return hits / pairs;
}

inline std::map<std::string, double> question_types(const Dataset& d, elabqud::backends::QuestionClassifier& c) {
  std::map<std::string, double> counts;
  double n = 0;
  for (const auto& a : d.annotations()) {
    bool blank = true;
    for (char ch : a.question) blank &= std::isspace(static_cast<unsigned char>(ch)) != 0;
    if (blank) continue;
    counts[c.classify(a.question)] += 1;
    n += 1;
  }
  for (auto& [k, v] : counts) v /= n;
  return counts;
}

// Welch t from the textbook formula; OOV words get `floor`.
inline double welch_t(const Dataset& d, const std::map<std::string, double>& lex, double floor) {
  auto score = [&](const std::string& w, std::vector<double>& out) {
    std::string lower;
    bool letter = false;
    for (char c : w) {
      letter |= std::isalpha(static_cast<unsigned char>(c)) != 0;
      lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!letter) return;
    auto it = lex.find(lower);
    out.push_back(it == lex.end() ? floor : it->second);
  };
  std::vector<double> x, y;
  std::set<std::string> docs;
  for (const auto& a : d.annotations()) {
    if (!a.target) continue;
    docs.insert(d.instance(a.instance_id).doc_id);
    for (const auto& t : target_tokens(d, a)) score(t, x);
  }
  for (const auto& id : docs) {
    for (const auto& s : d.document(id).sentences) {
      for (const auto& t : elabqud::corpus::tokenize(s.text)) score(t, y);
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double e : v) s += e;
    return s / static_cast<double>(v.size());
  };
  auto var = [&](const std::vector<double>& v) {
    double m = mean(v), s = 0;
    for (double e : v) s += (e - m) * (e - m);
    return s / static_cast<double>(v.size() - 1);
  };
  return (mean(x) - mean(y)) /
         std::sqrt(var(x) / static_cast<double>(x.size()) + var(y) / static_cast<double>(y.size()));
}

}  // namespace oracle
