#pragma once

// Checks that a submitted question does not lean on the elaboration's own
// content. Overlap is the fraction of the question's distinct content tokens
// that also occur in the elaboration.

#include <set>
#include <string>

#include "elabqud/analysis/targets.hpp"
#include "elabqud/corpus/tokenize.hpp"

namespace elabqud::service {

inline const std::set<std::string>& function_words() {
  static const std::set<std::string> words = {
      "a",     "an",    "the",   "and",   "or",    "but",   "if",    "so",    "of",    "to",    "in",    "on",
      "at",    "by",    "for",   "with",  "from",  "about", "into",  "as",    "than",  "that",  "this",  "these",
      "those", "it",    "its",   "they",  "them",  "their", "he",    "she",   "him",   "her",   "his",   "we",
      "us",    "our",   "you",   "your",  "i",     "me",    "my",    "is",    "are",   "was",   "were",  "be",
      "been",  "being", "am",    "do",    "does",  "did",   "have",  "has",   "had",   "can",   "could", "will",
      "would", "shall", "should", "may",  "might", "must",  "not",   "no",    "what",  "why",   "how",   "who",
      "whom",  "whose", "which", "when",  "where", "there", "here",  "some",  "any",   "all",   "such",  "very",
      "just",  "also",  "then",  "up",    "out",   "s",     "'s"};
  return words;
}

inline std::set<std::string> content_tokens(const std::string& text) {
  std::set<std::string> out;
  for (const auto& t : corpus::tokenize(text)) {
    if (!analysis::is_word_token(t)) continue;
    std::string w = analysis::FrequencyLexicon::lower(t);
    if (!function_words().count(w)) out.insert(std::move(w));
  }
  return out;
}

// 0 when the question has no content tokens.
inline double content_overlap(const std::string& question, const std::string& elaboration) {
  auto q = content_tokens(question);
  if (q.empty()) return 0.0;
  auto e = content_tokens(elaboration);
  std::size_t shared = 0;
  for (const auto& w : q) shared += e.count(w);
  return static_cast<double>(shared) / static_cast<double>(q.size());
}

}  // namespace elabqud::service
