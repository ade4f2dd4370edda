#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dosematch/dataset.hpp"

namespace dosematch {

struct NodeMeta {
  std::string id;
  int dose = 0;
  double score = 0.0;
};

struct Edge {
  int i = 0;  // i < j
  int j = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Cross-dose graph: no edge joins two nodes with the same dose, weights are
/// positive and finite, and each unordered pair appears at most once.
struct MatchGraph {
  std::vector<NodeMeta> nodes;
  std::vector<Edge> edges;

  int size() const { return static_cast<int>(nodes.size()); }
  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (i, j) with i < j, ascending by i
  double total_weight = 0.0;

  std::size_t size() const { return pairs.size(); }
  /// Node indices that appear in no pair, ascending.
  std::vector<int> unmatched(int num_nodes) const;
};

/// ((s_i - s_j)^2 + epsilon) / (d_i - d_j)^2
double edge_weight(double score_i, int dose_i, double score_j, int dose_j, double epsilon);

/// One edge per unordered cross-dose pair, weighted by `edge_weight`.
/// Every unit needs a score and a dose; throws ValidationError otherwise, when
/// epsilon <= 0, or when all units share a single dose.
MatchGraph build_graph(const UnitTable& units, double epsilon = 1e-8);
MatchGraph build_graph(std::vector<NodeMeta> nodes, double epsilon = 1e-8);

/// Maximum-weight matching on a general graph with integer weights
/// (Edmonds' blossom algorithm with dual variables, O(n^3)). Returns mate[v],
/// or -1 for exposed vertices. Ties are resolved deterministically by node
/// and edge order.
std::vector<int> max_weight_matching(int num_nodes, const std::vector<std::pair<int, int>>& endpoints,
                                     const std::vector<std::int64_t>& weights);

/// Among all maximum-cardinality matchings of `graph`, one of minimum total
/// weight. Runs the blossom solver on C - w with C = 1 + n * max(w), which
/// makes any larger matching outweigh any weight saving.
Matching max_matching_min_weight(const MatchGraph& graph);

/// Exhaustive search for n <= 16: maximum cardinality, then minimum weight,
/// then the lexicographically smallest pair list among exact ties.
Matching brute_force_matching(const MatchGraph& graph);

/// `unit_i,unit_j,dose_i,dose_j,weight`
std::string format_matching_csv(const Matching& matching, const MatchGraph& graph);
/// `i,j,unit_i,unit_j,weight`
std::string format_edges_csv(const MatchGraph& graph);

}  // namespace dosematch
