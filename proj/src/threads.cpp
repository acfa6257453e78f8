#include "trollscope/threads.hpp"

#include "trollscope/error.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace trollscope {

int ThreadTree::depth() const {
  int d = 0;
  for_each_node(*this, [&](const ThreadNode& n) { d = std::max(d, n.depth); });
  return d;
}

std::size_t ThreadTree::node_count() const {
  std::size_t n = 0;
  for_each_node(*this, [&](const ThreadNode&) { ++n; });
  return n;
}

ThreadTree build_thread(std::string_view submission_id, std::span<const Post> comments,
                        std::optional<Post> submission) {
  ThreadTree tree;
  if (submission) {
    tree.submission = std::move(*submission);
  } else {
    tree.submission.id = std::string(submission_id);
    tree.submission.kind = PostKind::Submission;
    tree.submission.title = std::string();
  }

  const std::size_t n = comments.size();
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Post& c = comments[i];
    if (!c.is_comment() || c.link_id != submission_id)
      throw Error(ErrorCode::MixedSubmission, "comment " + c.id + " does not belong to " + std::string(submission_id));
    if (!index.emplace(c.id, i).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate comment id " + c.id);
  }

  // parent[i] = index of parent comment, n for the submission, n + 1 for an orphan.
  const std::size_t kRoot = n, kOrphan = n + 1;
  std::vector<std::size_t> parent(n);
  std::vector<std::vector<std::size_t>> kids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Post& c = comments[i];
    if (*c.parent_id == submission_id) {
      parent[i] = kRoot;
    } else if (auto it = index.find(*c.parent_id); it != index.end()) {
      parent[i] = it->second;
      kids[it->second].push_back(i);
    } else {
      parent[i] = kOrphan;
    }
  }

  auto by_time = [&](std::size_t a, std::size_t b) { return ChronologicalOrder{}(comments[a], comments[b]); };

  std::vector<char> reached(n, 0);
  auto mark_subtree = [&](std::size_t start) {
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      if (reached[v]) continue;
      reached[v] = 1;
      for (std::size_t c : kids[v]) stack.push_back(c);
    }
  };

  std::vector<std::size_t> top;
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] == kRoot || parent[i] == kOrphan) {
      top.push_back(i);
      if (parent[i] == kOrphan) ++tree.orphan_count;
      mark_subtree(i);
    }
  }

  // Anything unreached sits on a parent cycle; cut each cycle at its earliest comment.
  std::vector<std::size_t> unreached;
  for (std::size_t i = 0; i < n; ++i)
    if (!reached[i]) unreached.push_back(i);
  std::sort(unreached.begin(), unreached.end(), by_time);
  for (std::size_t i : unreached) {
    if (reached[i]) continue;
    auto& siblings = kids[parent[i]];
    siblings.erase(std::remove(siblings.begin(), siblings.end(), i), siblings.end());
    parent[i] = kOrphan;
    ++tree.orphan_count;
    top.push_back(i);
    mark_subtree(i);
  }

  for (auto& k : kids) std::sort(k.begin(), k.end(), by_time);
  std::sort(top.begin(), top.end(), by_time);
  // Assemble nested nodes bottom-up (reverse pre-order) so deep chains never recurse.
  std::vector<std::size_t> order;
  std::vector<int> depth(n, 1);
  order.reserve(n);
  std::vector<std::size_t> stack(top.rbegin(), top.rend());
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (auto it = kids[v].rbegin(); it != kids[v].rend(); ++it) {
      depth[*it] = depth[v] + 1;
      stack.push_back(*it);
    }
  }
  std::vector<ThreadNode> built(n);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    std::size_t v = *it;
    ThreadNode& node = built[v];
    node.post = comments[v];
    node.depth = depth[v];
    node.children.reserve(kids[v].size());
    for (std::size_t c : kids[v]) node.children.push_back(std::move(built[c]));
  }
  tree.children.reserve(top.size());
  for (std::size_t i : top) tree.children.push_back(std::move(built[i]));
  return tree;
}

ThreadTree build_thread(const CorpusStore& store, std::string_view submission_id) {
  std::vector<Post> comments;
  for (auto i : store.by_link(submission_id)) comments.push_back(store.at(i));
  std::optional<Post> submission;
  if (const Post* s = store.find(submission_id); s && !s->is_comment()) submission = *s;
  return build_thread(submission_id, comments, std::move(submission));
}

ThreadStats thread_stats(std::span<const ThreadTree> trees) {
  if (trees.empty()) throw Error(ErrorCode::EmptyInput, "thread_stats needs at least one tree");
  std::vector<int> depths;
  depths.reserve(trees.size());
  for (const auto& t : trees) depths.push_back(t.depth());
  std::sort(depths.begin(), depths.end());
  ThreadStats s;
  s.count = depths.size();
  s.mean_depth = std::accumulate(depths.begin(), depths.end(), 0.0) / static_cast<double>(depths.size());
  s.median_depth = depths[(depths.size() - 1) / 2];
  return s;
}

std::string to_indented_text(const ThreadTree& tree, std::size_t max_body_chars) {
  auto clip = [&](const std::optional<std::string>& s) {
    std::string t = s.value_or("");
    for (char& c : t)
      if (c == '\n' || c == '\r') c = ' ';
    if (t.size() > max_body_chars) t = t.substr(0, max_body_chars) + "...";
    return t;
  };
  std::string out = "[" + tree.submission.id + "] " + tree.submission.author + ": " +
                    tree.submission.title.value_or("") + "\n";
  for_each_node(tree, [&](const ThreadNode& n) {
    out += std::string(static_cast<std::size_t>(n.depth) * 2, ' ');
    out += "[" + n.post.id + "] " + n.post.author + ": " + clip(n.post.body) + "\n";
  });
  return out;
}

}  // namespace trollscope
