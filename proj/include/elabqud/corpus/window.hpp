#pragma once

#include <algorithm>

#include "elabqud/corpus/types.hpp"

namespace elabqud::corpus {

inline constexpr int kPreWindow = 5;
inline constexpr int kPostWindow = 3;

// Up to `pre_size` sentences before and `post_size` after the elaboration,
// truncated at document edges without padding.
inline ContextWindow extract_window(const Document& doc, int elab_index, int pre_size = kPreWindow,
                                    int post_size = kPostWindow) {
  if (!doc.contains(elab_index)) {
    throw RangeError("elaboration index " + std::to_string(elab_index) + " out of range for document '" +
                     doc.doc_id + "'");
  }
  ContextWindow w;
  w.elaboration = doc.sentences[static_cast<std::size_t>(elab_index)];
  for (int i = std::max(0, elab_index - pre_size); i < elab_index; ++i) {
    w.pre.push_back(doc.sentences[static_cast<std::size_t>(i)]);
  }
  for (int i = elab_index + 1; i <= std::min(doc.size() - 1, elab_index + post_size); ++i) {
    w.post.push_back(doc.sentences[static_cast<std::size_t>(i)]);
  }
  return w;
}

// Positive when the anchor precedes the elaboration; -1 means the line after.
inline int anchor_distance(const QUDAnnotation& annotation, const ElaborationInstance& instance) {
  if (annotation.instance_id != instance.instance_id) {
    throw IntegrityError("annotation for '" + annotation.instance_id + "' applied to instance '" +
                         instance.instance_id + "'");
  }
  return instance.elab_index - annotation.anchor_index;
}

}  // namespace elabqud::corpus
