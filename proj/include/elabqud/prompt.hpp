#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "elabqud/util/hash.hpp"
#include "json.hpp"

namespace elabqud {

using nlohmann::json;

struct PromptSegment {
  std::string role;  // context, anchor, target, elaboration, question, instruction, cue, or a delimiter role
  std::string text;

  friend bool operator==(const PromptSegment&, const PromptSegment&) = default;
};

// A model input kept as typed segments so it can be truncated and re-rendered.
// Segments whose role appears in `delimiters` render as that delimiter;
// others render as their text. Pieces are joined with `joiner`.
struct AssembledPrompt {
  std::string layout;
  std::string layout_version;
  std::vector<PromptSegment> segments;
  std::map<std::string, std::string> delimiters;
  std::string joiner = " ";
  std::string rendered;

  std::string render() const {
    std::string out;
    bool first = true;
    for (const auto& s : segments) {
      auto d = delimiters.find(s.role);
      const std::string& piece = d != delimiters.end() ? d->second : s.text;
      if (!first) out += joiner;
      out += piece;
      first = false;
    }
    return out;
  }

  AssembledPrompt& finalize() {
    rendered = render();
    return *this;
  }

  std::size_t count(const std::string& role) const {
    return static_cast<std::size_t>(
        std::count_if(segments.begin(), segments.end(), [&](const PromptSegment& s) { return s.role == role; }));
  }

  // Drops the earliest `n` context segments, each with the separator that
  // follows it, and re-renders.
  AssembledPrompt without_leading_context(std::size_t n) const {
    AssembledPrompt p = *this;
    p.segments.clear();
    std::size_t dropped = 0;
    bool skip_separator = false;
    for (const auto& s : segments) {
      if (skip_separator && s.role == "separator") {
        skip_separator = false;
        continue;
      }
      skip_separator = false;
      if (s.role == "context" && dropped < n) {
        ++dropped;
        skip_separator = true;
        continue;
      }
      p.segments.push_back(s);
    }
    return p.finalize();
  }

  std::string sha256() const { return util::sha256_hex(rendered); }

  json to_json() const {
    json segs = json::array();
    for (const auto& s : segments) segs.push_back({{"role", s.role}, {"text", s.text}});
    return {{"layout", layout},   {"layout_version", layout_version}, {"segments", segs},
            {"delimiters", delimiters}, {"joiner", joiner},           {"rendered", rendered}};
  }
};

}  // namespace elabqud
