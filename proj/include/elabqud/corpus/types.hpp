#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "elabqud/corpus/tokenize.hpp"
#include "elabqud/errors.hpp"

namespace elabqud::corpus {

struct Sentence {
  int index = 0;
  std::string text;
  bool is_elaboration = false;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// A simplified article. Sentence indices are contiguous from 0.
struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  std::optional<std::string> source_level;

  int size() const { return static_cast<int>(sentences.size()); }
  bool contains(int index) const { return index >= 0 && index < size(); }

  const Sentence& at(int index) const {
    if (!contains(index)) {
      throw RangeError("sentence index " + std::to_string(index) + " out of range for document '" + doc_id +
                       "' with " + std::to_string(size()) + " sentences");
    }
    return sentences[static_cast<std::size_t>(index)];
  }

  friend bool operator==(const Document&, const Document&) = default;
};

inline bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!detail::is_space(c)) return false;
  }
  return true;
}

inline void validate(const Document& doc) {
  if (doc.doc_id.empty()) throw IntegrityError("document has empty doc_id");
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const auto& s = doc.sentences[i];
    if (s.index != static_cast<int>(i)) {
      throw IntegrityError("document '" + doc.doc_id + "': sentence at position " + std::to_string(i) +
                           " has index " + std::to_string(s.index));
    }
    if (is_blank(s.text)) {
      throw IntegrityError("document '" + doc.doc_id + "': sentence " + std::to_string(i) + " is blank");
    }
  }
}

struct ContextWindow {
  std::vector<Sentence> pre;
  Sentence elaboration;
  std::vector<Sentence> post;

  friend bool operator==(const ContextWindow&, const ContextWindow&) = default;
};

enum class Split { train, validation, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "test";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct ElaborationInstance {
  std::string instance_id;
  std::string doc_id;
  int elab_index = 0;
  ContextWindow context;
  Split split = Split::test;

  friend bool operator==(const ElaborationInstance&, const ElaborationInstance&) = default;
};

// Token offsets under the canonical tokenizer; end_token is exclusive.
struct TargetSpan {
  int sentence_index = 0;
  int start_token = 0;
  int end_token = 0;
  std::string surface_text;

  int length() const { return end_token - start_token; }

  friend bool operator==(const TargetSpan&, const TargetSpan&) = default;
};

// Builds a span over `sentence`, checking bounds and filling surface_text.
inline TargetSpan make_span(const Sentence& sentence, int start_token, int end_token) {
  auto tokens = tokenize(sentence.text);
  if (start_token < 0 || start_token >= end_token || end_token > static_cast<int>(tokens.size())) {
    throw IntegrityError("target span [" + std::to_string(start_token) + ", " + std::to_string(end_token) +
                         ") invalid for sentence " + std::to_string(sentence.index) + " with " +
                         std::to_string(tokens.size()) + " tokens");
  }
  return TargetSpan{sentence.index, start_token, end_token,
                    detokenize(tokens, static_cast<std::size_t>(start_token), static_cast<std::size_t>(end_token))};
}

struct QUDAnnotation {
  std::string instance_id;
  std::string annotator_id;
  std::string question;
  std::optional<TargetSpan> target;  // absent only for organizational sentences
  int anchor_index = 0;
  bool is_organizational = false;
  std::optional<std::string> timestamp;  // ISO-8601

  friend bool operator==(const QUDAnnotation&, const QUDAnnotation&) = default;
};

}  // namespace elabqud::corpus
