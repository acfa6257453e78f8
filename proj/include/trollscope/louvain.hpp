#pragma once

// Louvain community detection on a weighted undirected graph.

#include <cstdint>
#include <span>
#include <vector>

namespace trollscope {

struct WeightedEdge {
  int a = 0;
  int b = 0;
  double weight = 1.0;
};

struct LouvainResult {
  std::vector<int> community;          // per node, numbered 0.. by first appearance
  double modularity = 0;
  std::vector<double> level_modularity;  // after each aggregation level
};

/// Newman modularity of `community` over the graph. Self-loops contribute
/// to degrees and internal weight once (weight w adds w to A_ii).
double modularity(int node_count, std::span<const WeightedEdge> edges, std::span<const int> community);

/// Local moving in ascending node order, then aggregation, until no move
/// improves modularity. Deterministic.
LouvainResult louvain_communities(int node_count, std::span<const WeightedEdge> edges);

}  // namespace trollscope
