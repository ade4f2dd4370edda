#include "dosematch/matching.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dosematch/csv.hpp"
#include "dosematch/errors.hpp"

namespace dosematch {

void MatchGraph::validate() const {
  const int n = size();
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.i < 0 || e.j >= n || e.i >= e.j) throw ValidationError("graph: edge endpoints must satisfy 0 <= i < j < n");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError("graph: edge weights must be positive and finite");
    }
    if (nodes[e.i].dose == nodes[e.j].dose) throw ValidationError("graph: edge joins two nodes with equal dose");
    if (!seen.insert({e.i, e.j}).second) throw ValidationError("graph: duplicate edge");
  }
}

std::vector<int> Matching::unmatched(int num_nodes) const {
  std::vector<bool> used(num_nodes, false);
  for (auto [i, j] : pairs) used[i] = used[j] = true;
  std::vector<int> out;
  for (int v = 0; v < num_nodes; ++v) {
    if (!used[v]) out.push_back(v);
  }
  return out;
}

double edge_weight(double score_i, int dose_i, double score_j, int dose_j, double epsilon) {
  const double ds = score_i - score_j;
  if (dose_i == dose_j) throw ValidationError("edge weight: units share dose level " + std::to_string(dose_i));
  const double dz = static_cast<double>(dose_i - dose_j);
  return (ds * ds + epsilon) / (dz * dz);
}

MatchGraph build_graph(std::vector<NodeMeta> nodes, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("graph: epsilon must be positive");
  MatchGraph g;
  g.nodes = std::move(nodes);
  const int n = g.size();
  std::set<int> doses;
  for (const auto& node : g.nodes) {
    if (!std::isfinite(node.score)) throw ValidationError("graph: unit '" + node.id + "' has a non-finite score");
    doses.insert(node.dose);
  }
  if (doses.size() < 2) throw ValidationError("graph: all units same dose");
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (g.nodes[i].dose == g.nodes[j].dose) continue;
      g.edges.push_back({i, j, edge_weight(g.nodes[i].score, g.nodes[i].dose, g.nodes[j].score, g.nodes[j].dose, epsilon)});
    }
  }
  return g;
}

MatchGraph build_graph(const UnitTable& units, double epsilon) {
  std::vector<NodeMeta> nodes;
  nodes.reserve(units.size());
  for (const auto& u : units.units()) {
    if (!u.dose) throw ValidationError("graph: unit '" + u.id + "' has no dose");
    if (!u.score) throw ValidationError("graph: unit '" + u.id + "' has no score");
    nodes.push_back({u.id, *u.dose, *u.score});
  }
  return build_graph(std::move(nodes), epsilon);
}

namespace {

Matching from_pairs(std::vector<std::pair<int, int>> pairs, const MatchGraph& graph) {
  std::sort(pairs.begin(), pairs.end());
  Matching m;
  m.pairs = std::move(pairs);
  // Look weights up by endpoint pair.
  std::vector<std::vector<std::pair<int, double>>> adj(graph.size());
  for (const auto& e : graph.edges) adj[e.i].push_back({e.j, e.weight});
  for (auto [i, j] : m.pairs) {
    for (auto [k, w] : adj[i]) {
      if (k == j) {
        m.total_weight += w;
        break;
      }
    }
  }
  return m;
}

}  // namespace

Matching max_matching_min_weight(const MatchGraph& graph) {
  graph.validate();
  if (graph.edges.empty()) return {};
  const int n = graph.size();
  double max_w = 0.0;
  for (const auto& e : graph.edges) max_w = std::max(max_w, e.weight);
  const double big = 1.0 + static_cast<double>(n) * max_w;

  // Integer weights keep the dual updates exact; 2^50 / big quantizes the
  // transformed weights far below any tolerance we compare at. Weights are
  // kept even so the half-slack dual steps stay integral.
  const double scale = std::ldexp(1.0, 50) / big;
  std::vector<std::pair<int, int>> ends;
  std::vector<std::int64_t> weights;
  ends.reserve(graph.edges.size());
  weights.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    ends.push_back({e.i, e.j});
    weights.push_back(2 * std::llround((big - e.weight) * scale));
  }
  const std::vector<int> mate = max_weight_matching(n, ends, weights);

  std::vector<std::pair<int, int>> pairs;
  for (int v = 0; v < n; ++v) {
    if (mate[v] > v) pairs.push_back({v, mate[v]});
  }
  return from_pairs(std::move(pairs), graph);
}

namespace {

struct BruteForce {
  const MatchGraph& graph;
  std::vector<std::vector<std::pair<int, double>>> adj;  // neighbours with larger index
  std::vector<bool> used;
  std::vector<std::pair<int, int>> current;
  double current_weight = 0.0;
  std::vector<std::pair<int, int>> best;
  double best_weight = 0.0;
  bool have_best = false;

  bool better(std::size_t card, double weight, const std::vector<std::pair<int, int>>& pairs) const {
    if (!have_best) return true;
    if (card != best.size()) return card > best.size();
    if (weight != best_weight) return weight < best_weight;
    return pairs < best;
  }

  void search(int v, int free_left) {
    const int n = graph.size();
    while (v < n && used[v]) ++v;
    if (v >= n) {
      if (better(current.size(), current_weight, current)) {
        best = current;
        best_weight = current_weight;
        have_best = true;
      }
      return;
    }
    // Positive weights: the remaining search can only add weight.
    if (have_best) {
      const std::size_t bound = current.size() + static_cast<std::size_t>(free_left / 2);
      if (bound < best.size()) return;
      if (bound == best.size() && current_weight > best_weight) return;
    }
    used[v] = true;
    for (auto [u, w] : adj[v]) {
      if (used[u]) continue;
      used[u] = true;
      current.push_back({v, u});
      current_weight += w;
      search(v + 1, free_left - 2);
      current_weight -= w;
      current.pop_back();
      used[u] = false;
    }
    search(v + 1, free_left - 1);
    used[v] = false;
  }
};

}  // namespace

Matching brute_force_matching(const MatchGraph& graph) {
  if (graph.size() > 16) throw ValidationError("brute-force matching is limited to 16 nodes");
  graph.validate();
  BruteForce bf{graph, {}, {}, {}, 0.0, {}, 0.0, false};
  bf.adj.resize(graph.size());
  for (const auto& e : graph.edges) bf.adj[e.i].push_back({e.j, e.weight});
  for (auto& a : bf.adj) std::sort(a.begin(), a.end());
  bf.used.assign(graph.size(), false);
  bf.search(0, graph.size());
  Matching m;
  m.pairs = bf.best;
  m.total_weight = bf.best_weight;
  return m;
}

std::string format_matching_csv(const Matching& matching, const MatchGraph& graph) {
  std::vector<std::vector<std::pair<int, double>>> adj(graph.size());
  for (const auto& e : graph.edges) adj[e.i].push_back({e.j, e.weight});
  std::ostringstream out;
  csv::write_row(out, {"unit_i", "unit_j", "dose_i", "dose_j", "weight"});
  for (auto [i, j] : matching.pairs) {
    double w = 0.0;
    for (auto [k, wk] : adj[i]) {
      if (k == j) w = wk;
    }
    csv::write_row(out, {graph.nodes[i].id, graph.nodes[j].id, std::to_string(graph.nodes[i].dose),
                         std::to_string(graph.nodes[j].dose), csv::format_double(w)});
  }
  return out.str();
}

std::string format_edges_csv(const MatchGraph& graph) {
  std::ostringstream out;
  csv::write_row(out, {"i", "j", "unit_i", "unit_j", "weight"});
  for (const auto& e : graph.edges) {
    csv::write_row(out, {std::to_string(e.i), std::to_string(e.j), graph.nodes[e.i].id, graph.nodes[e.j].id,
                         csv::format_double(e.weight)});
  }
  return out.str();
}

}  // namespace dosematch
