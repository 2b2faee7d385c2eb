#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "elabqud/backends/tagger.hpp"
#include "elabqud/corpus/dataset.hpp"

namespace elabqud::analysis {

using nlohmann::json;

// ---- overlap ------------------------------------------------------------------

enum class OverlapPolicy {
  any_token,      // same sentence and at least one shared token position
  identical_span  // same sentence, start and end
};

inline OverlapPolicy parse_overlap_policy(const std::string& s) {
  if (s == "any_token") return OverlapPolicy::any_token;
  if (s == "identical_span") return OverlapPolicy::identical_span;
  throw ConfigError("unknown overlap policy '" + s + "' (any_token, identical_span)");
}

inline bool targets_overlap(const corpus::TargetSpan& a, const corpus::TargetSpan& b, OverlapPolicy policy) {
  if (a.sentence_index != b.sentence_index) return false;
  if (policy == OverlapPolicy::identical_span) return a.start_token == b.start_token && a.end_token == b.end_token;
  return a.start_token < b.end_token && b.start_token < a.end_token;
}

struct OverlapReport {
  double rate = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_overlapping = 0;

  json to_json() const { return {{"rate", rate}, {"n_pairs", n_pairs}, {"n_overlapping", n_overlapping}}; }
};

// Over unordered same-instance annotation pairs where both have a target.
inline OverlapReport target_overlap_rate(const corpus::Dataset& data, OverlapPolicy policy = OverlapPolicy::any_token) {
  OverlapReport r;
  for (const auto& [id, group] : data.annotations_by_instance()) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (!group[i]->target) continue;
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        if (!group[j]->target) continue;
        ++r.n_pairs;
        r.n_overlapping += targets_overlap(*group[i]->target, *group[j]->target, policy) ? 1 : 0;
      }
    }
  }
  if (r.n_pairs == 0) throw EmptyInputError("no instance has two annotations with targets");
  r.rate = static_cast<double>(r.n_overlapping) / static_cast<double>(r.n_pairs);
  return r;
}

// ---- length and part of speech -----------------------------------------------------

struct TargetStats {
  double mean_len_tokens = 0.0;
  double std_len_tokens = 0.0;  // population standard deviation
  std::map<std::string, std::size_t> pos_histogram;
  double pct_with_verb = 0.0;  // fractions in [0, 1]
  double pct_with_proper_noun = 0.0;
  std::size_t total_target_tokens = 0;
  std::size_t n_targets = 0;

  json to_json() const {
    return {{"mean_len_tokens", mean_len_tokens},
            {"std_len_tokens", std_len_tokens},
            {"pos_histogram", pos_histogram},
            {"pct_with_verb", pct_with_verb},
            {"pct_with_proper_noun", pct_with_proper_noun},
            {"total_target_tokens", total_target_tokens},
            {"n_targets", n_targets}};
  }
};

// Whole sentences are tagged (tags depend on context) and the target slice is read off.
inline TargetStats target_statistics(const corpus::Dataset& data, backends::TaggerBackend& tagger) {
  TargetStats s;
  std::map<std::pair<std::string, int>, std::vector<std::string>> tag_cache;
  std::vector<double> lengths;
  std::size_t with_verb = 0, with_proper = 0;
  for (const auto& a : data.annotations()) {
    if (!a.target) continue;
    const auto& doc = data.document(data.instance(a.instance_id).doc_id);
    const auto& t = *a.target;
    auto key = std::make_pair(doc.doc_id, t.sentence_index);
    auto it = tag_cache.find(key);
    if (it == tag_cache.end()) {
      auto tokens = corpus::tokenize(doc.at(t.sentence_index).text);
      std::vector<std::string> tags;
      try {
        tags = tagger.tag(tokens);
      } catch (const BackendError& e) {
        throw BackendError("tagging target of instance '" + a.instance_id + "': " + e.what(), e.retryable());
      }
      if (tags.size() != tokens.size()) {
        throw ProtocolError("tagger returned " + std::to_string(tags.size()) + " tags for " +
                            std::to_string(tokens.size()) + " tokens (instance '" + a.instance_id + "')");
      }
      it = tag_cache.emplace(key, std::move(tags)).first;
    }
    bool verb = false, proper = false;
    for (int i = t.start_token; i < t.end_token; ++i) {
      const auto& tag = it->second[static_cast<std::size_t>(i)];
      ++s.pos_histogram[tag];
      verb |= backends::is_verb_tag(tag);
      proper |= backends::is_proper_noun_tag(tag);
    }
    with_verb += verb ? 1 : 0;
    with_proper += proper ? 1 : 0;
    lengths.push_back(static_cast<double>(t.length()));
    s.total_target_tokens += static_cast<std::size_t>(t.length());
  }
  if (lengths.empty()) throw EmptyInputError("no annotation has a target");
  s.n_targets = lengths.size();
  double n = static_cast<double>(lengths.size());
  for (double l : lengths) s.mean_len_tokens += l;
  s.mean_len_tokens /= n;
  double ss = 0.0;
  for (double l : lengths) ss += (l - s.mean_len_tokens) * (l - s.mean_len_tokens);
  s.std_len_tokens = std::sqrt(ss / n);
  s.pct_with_verb = static_cast<double>(with_verb) / n;
  s.pct_with_proper_noun = static_cast<double>(with_proper) / n;
  return s;
}

// ---- word frequency -------------------------------------------------------------

enum class OovPolicy { floor, drop };

// Lowercased word -> log10 occurrences per million.
class FrequencyLexicon {
 public:
  FrequencyLexicon() = default;
  explicit FrequencyLexicon(std::map<std::string, double> table) : table_(std::move(table)) {}

  // Two columns, tab separated: word, log10 frequency per million.
  static FrequencyLexicon from_tsv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open frequency lexicon '" + path + "'");
    std::map<std::string, double> table;
    std::string line;
    std::size_t n = 0;
    while (std::getline(f, line)) {
      ++n;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError(n, "log_freq", "expected word<TAB>log10 frequency");
      try {
        std::size_t used = 0;
        std::string num = line.substr(tab + 1);
        double v = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("trailing");
        table[lower(line.substr(0, tab))] = v;
      } catch (const std::exception&) {
        throw ParseError(n, "log_freq", "not a number");
      }
    }
    return FrequencyLexicon(std::move(table));
  }

  std::optional<double> lookup(const std::string& word) const {
    auto it = table_.find(word);
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return table_.size(); }

  static std::string lower(const std::string& s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
  }

 private:
  std::map<std::string, double> table_;
};

struct FrequencyOptions {
  OovPolicy oov = OovPolicy::floor;
  double oov_floor = std::log10(0.5);
  bool welch = true;  // Student's pooled-variance test otherwise
};

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Independent two-sample t-test, two-sided; variances use n - 1.
inline TTest two_sample_t(const std::vector<double>& a, const std::vector<double>& b, bool welch) {
  if (a.size() < 2 || b.size() < 2) throw StatisticsError("t-test needs at least two values per sample");
  auto moments = [](const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::make_pair(m, ss / static_cast<double>(x.size() - 1));
  };
  auto [ma, va] = moments(a);
  auto [mb, vb] = moments(b);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  TTest r;
  double se2;
  if (welch) {
    se2 = va / na + vb / nb;
    double num = se2 * se2;
    double den = (va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0);
    r.df = den > 0.0 ? num / den : na + nb - 2.0;
  } else {
    double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    se2 = pooled * (1.0 / na + 1.0 / nb);
    r.df = na + nb - 2.0;
  }
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, r.df, 1.0};
    r.t = ma < mb ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  boost::math::students_t dist(r.df);
  r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))), 0.0, 1.0);
  return r;
}

struct FrequencyTestReport {
  double mean_log_freq_targets = 0.0;
  double mean_log_freq_document = 0.0;
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
  std::size_t n_target_tokens = 0;
  std::size_t n_doc_tokens = 0;
  std::string test;

  json to_json() const {
    return {{"mean_log_freq_targets", mean_log_freq_targets},
            {"mean_log_freq_document", mean_log_freq_document},
            {"t_statistic", t_statistic},
            {"degrees_of_freedom", degrees_of_freedom},
            {"p_value", p_value},
            {"n_target_tokens", n_target_tokens},
            {"n_doc_tokens", n_doc_tokens},
            {"test", test}};
  }
};

// Tokens without a letter (punctuation, numbers) are not words and are skipped.
inline bool is_word_token(const std::string& t) {
  for (char c : t) {
    if (std::isalpha(static_cast<unsigned char>(c))) return true;
  }
  return false;
}

inline std::vector<double> log_frequencies(const std::vector<std::string>& tokens, const FrequencyLexicon& lex,
                                           const FrequencyOptions& opt) {
  std::vector<double> out;
  for (const auto& t : tokens) {
    if (!is_word_token(t)) continue;
    auto v = lex.lookup(FrequencyLexicon::lower(t));
    if (v) {
      out.push_back(*v);
    } else if (opt.oov == OovPolicy::floor) {
      out.push_back(opt.oov_floor);
    }
  }
  return out;
}

inline double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

// Target tokens against every token of the documents those targets come from.
inline FrequencyTestReport frequency_test(const corpus::Dataset& data, const FrequencyLexicon& lex,
                                          const FrequencyOptions& opt = {}) {
  std::vector<std::string> target_tokens;
  std::set<std::string> docs;
  for (const auto& a : data.annotations()) {
    if (!a.target) continue;
    const auto& doc = data.document(data.instance(a.instance_id).doc_id);
    docs.insert(doc.doc_id);
    auto tokens = corpus::tokenize(doc.at(a.target->sentence_index).text);
    for (int i = a.target->start_token; i < a.target->end_token; ++i) target_tokens.push_back(tokens[static_cast<std::size_t>(i)]);
  }
  std::vector<std::string> doc_tokens;
  for (const auto& id : docs) {
    for (const auto& s : data.document(id).sentences) {
      for (auto& t : corpus::tokenize(s.text)) doc_tokens.push_back(std::move(t));
    }
  }
  auto a = log_frequencies(target_tokens, lex, opt);
  auto b = log_frequencies(doc_tokens, lex, opt);
  if (a.empty() || b.empty()) throw StatisticsError("frequency test: a sample is empty");
  auto t = two_sample_t(a, b, opt.welch);
  FrequencyTestReport r;
  r.mean_log_freq_targets = mean_of(a);
  r.mean_log_freq_document = mean_of(b);
  r.t_statistic = t.t;
  r.degrees_of_freedom = t.df;
  r.p_value = t.p_value;
  r.n_target_tokens = a.size();
  r.n_doc_tokens = b.size();
  r.test = opt.welch ? "welch" : "student";
  return r;
}

}  // namespace elabqud::analysis
