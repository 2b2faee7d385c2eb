#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "elabqud/util/hash.hpp"

namespace elabqud::corpus {

// Canonical rule-based tokenizer. Splits on ASCII whitespace, peels opening
// punctuation from the front of each chunk and closing/clause punctuation from
// the back, one mark per token. Letter-period abbreviations ("U.S.", "e.g.")
// keep their final period. Every token statistic in this library is counted
// with this tokenizer, so changes here must bump kTokenizerVersion.
inline constexpr std::string_view kTokenizerVersion = "elabqud-tokenizer/1";

inline std::string tokenizer_fingerprint() {
  return util::sha256_hex(kTokenizerVersion).substr(0, 16);
}

namespace detail {

inline constexpr std::array<std::string_view, 7> kOpening = {"(", "[", "{", "\"", "'", "\xE2\x80\x9C", "\xE2\x80\x98"};
inline constexpr std::array<std::string_view, 13> kClosing = {".", ",", ";", ":", "!", "?", ")", "]", "}", "\"", "'",
                                                              "\xE2\x80\x9D", "\xE2\x80\x99"};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// ([A-Za-z]\.){2,}
inline bool is_abbreviation(std::string_view s) {
  if (s.size() < 4 || s.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < s.size(); i += 2) {
    if (!is_alpha(s[i]) || s[i + 1] != '.') return false;
  }
  return true;
}

template <std::size_t N>
std::string_view match_prefix(std::string_view s, const std::array<std::string_view, N>& marks) {
  for (auto m : marks) {
    if (s.size() >= m.size() && s.substr(0, m.size()) == m) return m;
  }
  return {};
}

template <std::size_t N>
std::string_view match_suffix(std::string_view s, const std::array<std::string_view, N>& marks) {
  for (auto m : marks) {
    if (s.size() >= m.size() && s.substr(s.size() - m.size()) == m) return m;
  }
  return {};
}

inline bool is_punct_token(std::string_view t) {
  for (auto m : kOpening) if (t == m) return true;
  for (auto m : kClosing) if (t == m) return true;
  return false;
}

inline void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  while (!chunk.empty()) {
    auto m = match_prefix(chunk, kOpening);
    if (m.empty()) break;
    out.emplace_back(m);
    chunk.remove_prefix(m.size());
  }
  std::vector<std::string> trailing;
  while (!chunk.empty() && !is_abbreviation(chunk)) {
    auto m = match_suffix(chunk, kClosing);
    if (m.empty()) break;
    trailing.emplace_back(m);
    chunk.remove_suffix(m.size());
  }
  if (!chunk.empty()) out.emplace_back(chunk);
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_space(text[j])) ++j;
    if (j > i) detail::split_chunk(text.substr(i, j - i), out);
    i = j;
  }
  return out;
}

// Inverse of tokenize up to whitespace: closing marks attach to the previous
// token, opening brackets to the next. Quotes stay space-separated because
// their direction is ambiguous.
inline std::string detokenize(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  static constexpr std::array<std::string_view, 9> kAttachLeft = {".", ",", ";", ":", "!", "?", ")", "]", "}"};
  static constexpr std::array<std::string_view, 3> kAttachRight = {"(", "[", "{"};
  auto in = [](std::string_view t, const auto& set) {
    for (auto m : set) if (t == m) return true;
    return false;
  };
  std::string out;
  bool glue_next = false;
  for (std::size_t k = begin; k < end; ++k) {
    const std::string& t = tokens[k];
    bool glue = glue_next;
    if (k > begin && in(t, kAttachLeft)) {
      const std::string& prev = tokens[k - 1];
      // "a.b" + "." would re-tokenize as the abbreviation "a.b."
      glue = !detail::is_abbreviation(prev + t);
    }
    if (k > begin && !glue) out.push_back(' ');
    out += t;
    glue_next = in(t, kAttachRight);
  }
  return out;
}

inline std::string detokenize(const std::vector<std::string>& tokens) { return detokenize(tokens, 0, tokens.size()); }

}  // namespace elabqud::corpus
