#pragma once

#include <Eigen/Dense>
#include <set>
#include <vector>

#include "bnlte/data.hpp"

namespace bnlte {

// Edge indicator convention used throughout: edges(j, l) = 1 means variable
// l is a parent of variable j (an edge l -> j). Rows index children.
using EdgeMatrix = Eigen::MatrixXi;

// True iff the directed graph has no cycle (DFS with three-color marking).
bool is_acyclic(const EdgeMatrix& edges);

// True iff there is a directed path from `from` to `to` along active edges.
bool has_path(const EdgeMatrix& edges, int from, int to);

// Topological order of the active graph (children after parents). Throws if
// the graph is cyclic.
std::vector<int> topological_order(const EdgeMatrix& edges);

// Root/sink constraints. Roots admit no incoming edges and no baseline
// trajectory; sinks admit no outgoing edges.
struct BackgroundKnowledge {
  std::set<int> root_nodes;
  std::set<int> sink_nodes;

  static BackgroundKnowledge from_roles(const std::vector<Role>& roles);

  bool is_root(int j) const { return root_nodes.count(j) > 0; }
  bool is_sink(int j) const { return sink_nodes.count(j) > 0; }

  // Whether the edge parent -> child is disallowed.
  bool forbids(int child, int parent) const {
    return child == parent || is_root(child) || is_sink(parent);
  }

  void validate(int p) const;
};

}  // namespace bnlte
