#include "trollscope/louvain.hpp"

#include "trollscope/error.hpp"

#include <algorithm>
#include <map>

namespace trollscope {

namespace {

// Symmetric adjacency; a self-loop of weight w is stored once as A_ii = w.
struct Adjacency {
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<double> degree;
  double total = 0;  // 2m = sum of degrees

  Adjacency(int n, std::span<const WeightedEdge> edges) : rows(static_cast<std::size_t>(n)), degree(static_cast<std::size_t>(n), 0.0) {
    std::vector<std::map<int, double>> acc(static_cast<std::size_t>(n));
    for (const auto& e : edges) {
      if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
      acc[static_cast<std::size_t>(e.a)][e.b] += e.weight;
      if (e.a != e.b) acc[static_cast<std::size_t>(e.b)][e.a] += e.weight;
    }
    for (int i = 0; i < n; ++i)
      for (auto [j, w] : acc[static_cast<std::size_t>(i)]) {
        rows[static_cast<std::size_t>(i)].emplace_back(j, w);
        degree[static_cast<std::size_t>(i)] += w;
      }
    for (double d : degree) total += d;
  }
  int size() const { return static_cast<int>(rows.size()); }
};

double modularity_of(const Adjacency& g, std::span<const int> community) {
  if (g.total <= 0) return 0.0;
  std::map<int, double> in, tot;
  for (int i = 0; i < g.size(); ++i) {
    int c = community[static_cast<std::size_t>(i)];
    tot[c] += g.degree[static_cast<std::size_t>(i)];
    for (auto [j, w] : g.rows[static_cast<std::size_t>(i)])
      if (community[static_cast<std::size_t>(j)] == c) in[c] += w;
  }
  double q = 0;
  for (auto [c, t] : tot) q += in[c] / g.total - (t / g.total) * (t / g.total);
  return q;
}

// One level of local moving; returns whether any node changed community.
bool local_moving(const Adjacency& g, std::vector<int>& community) {
  const int n = g.size();
  std::vector<double> tot(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) tot[static_cast<std::size_t>(community[static_cast<std::size_t>(i)])] += g.degree[static_cast<std::size_t>(i)];
  bool any = false;
  std::map<int, double> links;
  for (bool moved = true; moved;) {
    moved = false;
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int own = community[ui];
      const double ki = g.degree[ui];
      links.clear();
      links[own] += 0.0;
      for (auto [j, w] : g.rows[ui])
        if (j != i) links[community[static_cast<std::size_t>(j)]] += w;
      tot[static_cast<std::size_t>(own)] -= ki;
      auto gain = [&](int c) { return links[c] - tot[static_cast<std::size_t>(c)] * ki / g.total; };
      int best = own;
      double best_gain = gain(own);
      for (auto [c, w] : links) {
        double v = gain(c);
        if (v > best_gain + 1e-12) {
          best = c;
          best_gain = v;
        }
      }
      tot[static_cast<std::size_t>(best)] += ki;
      if (best != own) {
        community[ui] = best;
        moved = any = true;
      }
    }
  }
  return any;
}

// Renumbers communities 0.. in order of first appearance; returns the count.
int renumber(std::vector<int>& community) {
  std::map<int, int> ids;
  for (int& c : community) {
    auto [it, fresh] = ids.try_emplace(c, static_cast<int>(ids.size()));
    c = it->second;
  }
  return static_cast<int>(ids.size());
}

}  // namespace

double modularity(int node_count, std::span<const WeightedEdge> edges, std::span<const int> community) {
  if (community.size() != static_cast<std::size_t>(node_count))
    throw Error(ErrorCode::DimensionMismatch, "partition size differs from node count");
  return modularity_of(Adjacency(node_count, edges), community);
}

LouvainResult louvain_communities(int node_count, std::span<const WeightedEdge> edges) {
  if (node_count <= 0) throw Error(ErrorCode::EmptyInput, "graph has no nodes");
  LouvainResult result;
  result.community.resize(static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) result.community[static_cast<std::size_t>(i)] = i;

  Adjacency g(node_count, edges);
  if (g.total <= 0) {
    result.level_modularity.push_back(0.0);
    return result;
  }
  std::vector<WeightedEdge> level_edges(edges.begin(), edges.end());
  int level_nodes = node_count;
  for (;;) {
    std::vector<int> local(static_cast<std::size_t>(level_nodes));
    for (int i = 0; i < level_nodes; ++i) local[static_cast<std::size_t>(i)] = i;
    bool changed = local_moving(g, local);
    if (!changed) break;
    int count = renumber(local);
    for (int& c : result.community) c = local[static_cast<std::size_t>(c)];

    std::map<std::pair<int, int>, double> agg;
    for (int i = 0; i < g.size(); ++i)
      for (auto [j, w] : g.rows[static_cast<std::size_t>(i)]) {
        int a = local[static_cast<std::size_t>(i)], b = local[static_cast<std::size_t>(j)];
        // Each i != j link is visited from both ends; the aggregated self-loop
        // keeps both visits (ordered pairs), an outside edge keeps one.
        if (a == b) agg[{a, a}] += w;
        else if (a < b) agg[{a, b}] += w;
      }
    level_edges.clear();
    for (auto& [k, w] : agg) level_edges.push_back({k.first, k.second, w});
    level_nodes = count;
    g = Adjacency(level_nodes, level_edges);
    std::vector<int> singletons(static_cast<std::size_t>(level_nodes));
    for (int i = 0; i < level_nodes; ++i) singletons[static_cast<std::size_t>(i)] = i;
    result.level_modularity.push_back(modularity_of(g, singletons));
  }
  renumber(result.community);
  result.modularity = modularity(node_count, edges, result.community);
  if (result.level_modularity.empty()) result.level_modularity.push_back(result.modularity);
  return result;
}

}  // namespace trollscope
