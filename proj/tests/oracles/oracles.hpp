#pragma once

// Naive reference implementations the tests compare the library against.
// They work on raw post vectors with linear scans and never touch the
// store indexes.

#include "trollscope/corpus.hpp"
#include "trollscope/features.hpp"
#include "trollscope/louvain.hpp"
#include "trollscope/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using trollscope::Post;
using trollscope::PostKind;
using trollscope::Rng;

inline std::string id36(std::uint64_t v) {
  const char* digits = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string s;
  do {
    s.insert(s.begin(), digits[v % 36]);
    v /= 36;
  } while (v);
  return s;
}

inline Post make_submission(std::string id, std::string author, std::int64_t t, std::string title) {
  Post p;
  p.id = std::move(id);
  p.kind = PostKind::Submission;
  p.author = std::move(author);
  p.subreddit = "test";
  p.created_utc = t;
  p.title = std::move(title);
  p.body = std::string();
  return p;
}

inline Post make_comment(std::string id, std::string author, std::int64_t t, std::string link, std::string parent,
                         std::string body = "text") {
  Post p;
  p.id = std::move(id);
  p.kind = PostKind::Comment;
  p.author = std::move(author);
  p.subreddit = "test";
  p.created_utc = t;
  p.link_id = std::move(link);
  p.parent_id = std::move(parent);
  p.body = std::move(body);
  return p;
}

// ---------------------------------------------------------------------------
// Comment forests

struct Forest {
  std::string submission = "root";
  std::vector<Post> comments;
};

/// Random comment forest: each comment hangs off the submission, an earlier
/// comment, or (rarely) an id that does not exist.
inline Forest random_forest(Rng& rng, std::size_t n) {
  Forest f;
  std::int64_t t = 1'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    t += static_cast<std::int64_t>(trollscope::uniform_index(rng, 3));  // ties happen
    std::string parent;
    double u = trollscope::uniform_unit(rng);
    if (i == 0 || u < 0.25) parent = f.submission;
    else if (u < 0.27) parent = "missing" + std::to_string(i);
    else parent = f.comments[trollscope::uniform_index(rng, i)].id;
    f.comments.push_back(make_comment("c" + id36(i * 7919 + 13), "u" + std::to_string(trollscope::uniform_index(rng, 50)),
                                      t, f.submission, parent));
  }
  return f;
}

/// Expected parent of each comment id: a comment id, or "" for the top level.
inline std::map<std::string, std::string> parent_map(const Forest& f) {
  std::set<std::string> ids;
  for (const auto& c : f.comments) ids.insert(c.id);
  std::map<std::string, std::string> m;
  for (const auto& c : f.comments) m[c.id] = ids.count(*c.parent_id) ? *c.parent_id : "";
  return m;
}

inline std::size_t orphan_count(const Forest& f) {
  std::set<std::string> ids;
  for (const auto& c : f.comments) ids.insert(c.id);
  std::size_t n = 0;
  for (const auto& c : f.comments)
    if (*c.parent_id != f.submission && !ids.count(*c.parent_id)) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Prefilter and feature fixtures

struct CorpusFixture {
  std::vector<Post> posts;
  std::vector<std::string> accounts;
  trollscope::SeedSet seed;
};

struct FixtureShape {
  std::size_t accounts = 40;
  std::size_t seed = 5;
  std::size_t submissions = 60;
  std::size_t comments = 300;
  std::size_t titles = 25;
};

inline CorpusFixture random_corpus(Rng& rng, const FixtureShape& shape) {
  using trollscope::uniform_index;
  using trollscope::uniform_unit;
  CorpusFixture fx;
  for (std::size_t a = 0; a < shape.accounts; ++a) fx.accounts.push_back("acct" + std::to_string(a));
  for (std::size_t s = 0; s < shape.seed && s < shape.accounts; ++s) fx.seed.names.insert(fx.accounts[s]);
  fx.seed.label = "fixture";

  std::vector<std::string> titles;
  for (std::size_t i = 0; i < shape.titles; ++i) {
    // Lengths straddle the 15 code point minimum.
    std::string t = "title " + std::to_string(i);
    if (i % 3) t += " about the news";
    titles.push_back(t);
  }
  auto author = [&] {
    if (uniform_unit(rng) < 0.03) return std::string("[deleted]");
    return fx.accounts[uniform_index(rng, fx.accounts.size())];
  };

  std::int64_t t = 1'500'000'000;
  std::vector<std::string> subs;
  std::map<std::string, std::vector<std::string>> comments_on;
  std::size_t next = 0;
  std::size_t total = shape.submissions + shape.comments;
  for (std::size_t i = 0; i < total; ++i) {
    t += 1 + static_cast<std::int64_t>(uniform_index(rng, 3600));
    bool submission = subs.empty() || uniform_index(rng, total) < shape.submissions;
    std::string id = id36(100000 + next++);
    if (submission) {
      std::string title = titles[uniform_index(rng, titles.size())];
      double u = uniform_unit(rng);
      if (u < 0.2) title = "  " + title;
      else if (u < 0.4) title.insert(title.find(' '), "  ");
      fx.posts.push_back(make_submission(id, author(), t, title));
      subs.push_back(id);
    } else {
      const std::string& link = subs[uniform_index(rng, subs.size())];
      auto& siblings = comments_on[link];
      std::string parent = siblings.empty() || uniform_unit(rng) < 0.4 ? link : siblings[uniform_index(rng, siblings.size())];
      fx.posts.push_back(make_comment(id, author(), t, link, parent));
      siblings.push_back(id);
    }
  }
  return fx;
}

/// ASCII-only title normalization: trim and collapse space runs.
inline std::string ascii_normalize(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

inline bool eligible(const std::string& author, const trollscope::SeedSet& seed) {
  return author != "[deleted]" && !seed.names.count(author);
}

inline std::set<std::string> brute_same_title(const std::vector<Post>& posts, const trollscope::SeedSet& seed,
                                              std::size_t min_len) {
  std::set<std::string> out;
  for (const auto& p : posts) {
    if (p.is_comment() || !eligible(p.author, seed)) continue;
    for (const auto& q : posts) {
      if (q.is_comment() || !seed.names.count(q.author)) continue;
      std::string tq = ascii_normalize(*q.title);
      if (tq.size() >= min_len && tq == ascii_normalize(*p.title)) out.insert(p.author);
    }
  }
  return out;
}

inline std::set<std::string> brute_commenters(const std::vector<Post>& posts, const trollscope::SeedSet& seed) {
  std::set<std::string> out;
  for (const auto& c : posts) {
    if (!c.is_comment() || !eligible(c.author, seed)) continue;
    for (const auto& s : posts)
      if (!s.is_comment() && s.id == *c.link_id && seed.names.count(s.author)) out.insert(c.author);
  }
  return out;
}

/// Plain definition of the nine features; a seed member's own posts never
/// count as "troll" activity for itself.
inline trollscope::FeatureVector brute_features(const std::string& account, const std::vector<Post>& posts,
                                                const trollscope::SeedSet& seed, std::int64_t reference_utc) {
  trollscope::FeatureVector f;
  auto troll = [&](const std::string& a) { return seed.names.count(a) && a != account; };
  std::int64_t first = 0;
  bool any = false;
  double same = 0, coc = 0, on = 0, direct = 0, rep = 0, rep_in = 0;
  for (const auto& p : posts) {
    if (p.author != account) continue;
    if (!any || p.created_utc < first) first = p.created_utc;
    any = true;
    if (!p.is_comment()) {
      ++f.total_submissions;
      for (const auto& q : posts)
        if (!q.is_comment() && troll(q.author) && ascii_normalize(*q.title) == ascii_normalize(*p.title)) {
          ++same;
          break;
        }
      continue;
    }
    ++f.total_comments;
    bool on_troll = false, reply_troll = false, co = false;
    for (const auto& q : posts) {
      if (!troll(q.author)) continue;
      if (!q.is_comment() && q.id == *p.link_id) on_troll = true;
      if (q.is_comment() && q.id == *p.parent_id) reply_troll = true;
      if (q.is_comment() && *q.link_id == *p.link_id) co = true;
    }
    coc += co;
    on += on_troll;
    direct += on_troll && *p.parent_id == *p.link_id;
    rep += reply_troll;
    rep_in += reply_troll && on_troll;
  }
  if (!any) {
    f.no_archived_posts = true;
    return f;
  }
  double nc = static_cast<double>(f.total_comments), ns = static_cast<double>(f.total_submissions);
  f.account_age_years = std::max(0.0, static_cast<double>(reference_utc - first) / 31'557'600.0);
  f.frac_same_title = ns ? same / ns : 0;
  f.frac_cocommented = nc ? coc / nc : 0;
  f.frac_on_troll_submissions = nc ? on / nc : 0;
  f.frac_direct_replies_on_troll_submissions = nc ? direct / nc : 0;
  f.frac_replies_to_troll_comments = nc ? rep / nc : 0;
  f.frac_replies_to_troll_comments_in_troll_submissions = nc ? rep_in / nc : 0;
  return f;
}

// ---------------------------------------------------------------------------
// Statistics

/// sup |F_a - F_b| evaluated at every sample point.
inline double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
  auto ecdf = [](const std::vector<double>& s, double x) {
    std::size_t n = 0;
    for (double v : s) n += v <= x;
    return static_cast<double>(n) / static_cast<double>(s.size());
  };
  double d = 0;
  for (const auto* s : {&a, &b})
    for (double x : *s) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
  return d;
}

// ---------------------------------------------------------------------------
// Graphs

/// Modularity from a dense adjacency matrix: (1/2m) Σ_ij [A_ij - k_i k_j / 2m] δ(c_i, c_j),
/// with a self-loop of weight w stored as A_ii = w.
inline double dense_modularity(int n, const std::vector<trollscope::WeightedEdge>& edges, const std::vector<int>& c) {
  std::vector<std::vector<double>> A(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (const auto& e : edges) {
    A[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(e.b)] += e.weight;
    if (e.a != e.b) A[static_cast<std::size_t>(e.b)][static_cast<std::size_t>(e.a)] += e.weight;
  }
  std::vector<double> k(static_cast<std::size_t>(n), 0.0);
  double two_m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      k[static_cast<std::size_t>(i)] += A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      two_m += A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  if (two_m == 0) return 0;
  double q = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (c[static_cast<std::size_t>(i)] == c[static_cast<std::size_t>(j)])
        q += A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
             k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)] / two_m;
  return q / two_m;
}

/// Best modularity over every partition (restricted growth strings); n <= 11.
inline std::pair<double, std::vector<int>> best_partition(int n, const std::vector<trollscope::WeightedEdge>& edges) {
  std::vector<int> c(static_cast<std::size_t>(n), 0), best = c;
  double best_q = dense_modularity(n, edges, c);
  std::vector<int> maxv(static_cast<std::size_t>(n), 0);
  for (;;) {
    int i = n - 1;
    while (i > 0 && c[static_cast<std::size_t>(i)] > maxv[static_cast<std::size_t>(i - 1)]) --i;
    if (i <= 0) break;
    ++c[static_cast<std::size_t>(i)];
    maxv[static_cast<std::size_t>(i)] = std::max(maxv[static_cast<std::size_t>(i - 1)], c[static_cast<std::size_t>(i)]);
    for (int j = i + 1; j < n; ++j) {
      c[static_cast<std::size_t>(j)] = 0;
      maxv[static_cast<std::size_t>(j)] = maxv[static_cast<std::size_t>(i)];
    }
    double q = dense_modularity(n, edges, c);
    if (q > best_q + 1e-15) {
      best_q = q;
      best = c;
    }
  }
  return {best_q, best};
}

/// Same partition up to renaming of the communities.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [x, fresh_x] = ab.emplace(a[i], b[i]);
    auto [y, fresh_y] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

/// Two 5-cliques joined by a single edge.
inline std::vector<trollscope::WeightedEdge> two_cliques() {
  std::vector<trollscope::WeightedEdge> e;
  for (int base : {0, 5})
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) e.push_back({base + i, base + j, 1.0});
  e.push_back({4, 5, 1.0});
  return e;
}

inline double plain_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0 || vv == 0) return 0;
  return std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
}

/// Threshold graph over all words, breadth-first two hops from the keyword;
/// returns sorted node words and the (word, word) edges among them.
inline std::pair<std::vector<std::string>, std::set<std::pair<std::string, std::string>>> brute_similarity_graph(
    const std::vector<std::string>& words, const std::vector<std::vector<double>>& vecs, const std::string& keyword,
    double t) {
  std::size_t n = words.size(), k = 0;
  while (words[k] != keyword) ++k;
  std::vector<int> dist(n, -1);
  dist[k] = 0;
  std::vector<std::size_t> frontier{k};
  for (int hop = 1; hop <= 2; ++hop) {
    std::vector<std::size_t> next;
    for (std::size_t a : frontier)
      for (std::size_t b = 0; b < n; ++b)
        if (b != a && dist[b] < 0 && plain_cosine(vecs[a], vecs[b]) >= t) {
          dist[b] = hop;
          next.push_back(b);
        }
    frontier = next;
  }
  std::vector<std::string> nodes;
  for (std::size_t i = 0; i < n; ++i)
    if (dist[i] >= 0) nodes.push_back(words[i]);
  std::sort(nodes.begin(), nodes.end());
  std::set<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && dist[i] >= 0 && dist[j] >= 0 && words[i] < words[j] && plain_cosine(vecs[i], vecs[j]) >= t)
        edges.emplace(words[i], words[j]);
  return {nodes, edges};
}

}  // namespace oracle
