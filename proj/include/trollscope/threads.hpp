#pragma once

// Comment-tree reconstruction from flat link_id / parent_id records.

#include "trollscope/corpus.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trollscope {

struct ThreadNode {
  Post post;
  std::vector<ThreadNode> children;  // ascending (created_utc, id)
  int depth = 1;
};

struct ThreadTree {
  Post submission;  // a stub with an empty title when the record is missing
  std::vector<ThreadNode> children;
  std::size_t orphan_count = 0;

  /// Maximum node depth; 0 for a submission without comments.
  int depth() const;
  std::size_t node_count() const;
};

/// Builds the reply tree of one submission. Comments whose parent is unknown
/// (or that sit on a parent cycle) become depth-1 orphans and are counted.
/// Throws Error(MixedSubmission) if a comment belongs to another submission.
ThreadTree build_thread(std::string_view submission_id, std::span<const Post> comments,
                        std::optional<Post> submission = std::nullopt);

/// Convenience: fetches the submission and its comments from the store.
ThreadTree build_thread(const CorpusStore& store, std::string_view submission_id);

struct ThreadStats {
  std::size_t count = 0;
  double mean_depth = 0;
  double median_depth = 0;  // lower middle for an even count
};

/// Throws Error(EmptyInput) for an empty list.
ThreadStats thread_stats(std::span<const ThreadTree> trees);

/// Visits every node depth-first in sibling order.
template <typename Fn>
void for_each_node(const ThreadTree& tree, Fn&& fn) {
  std::vector<const ThreadNode*> stack;
  for (auto it = tree.children.rbegin(); it != tree.children.rend(); ++it) stack.push_back(&*it);
  while (!stack.empty()) {
    const ThreadNode* n = stack.back();
    stack.pop_back();
    fn(*n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
}

/// Indented text rendering for the analyst evidence view.
std::string to_indented_text(const ThreadTree& tree, std::size_t max_body_chars = 80);

}  // namespace trollscope
