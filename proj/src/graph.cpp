#include "bnlte/graph.hpp"

#include <stdexcept>

namespace bnlte {

namespace {

enum Color : unsigned char { kWhite = 0, kGray = 1, kBlack = 2 };

// Out-neighbors of v are the children j with edges(j, v) = 1.
bool dfs_has_cycle(const EdgeMatrix& edges, int v, std::vector<unsigned char>& color) {
  color[static_cast<std::size_t>(v)] = kGray;
  const int p = static_cast<int>(edges.rows());
  for (int j = 0; j < p; ++j) {
    if (edges(j, v) == 0) continue;
    const auto c = color[static_cast<std::size_t>(j)];
    if (c == kGray) return true;
    if (c == kWhite && dfs_has_cycle(edges, j, color)) return true;
  }
  color[static_cast<std::size_t>(v)] = kBlack;
  return false;
}

}  // namespace

bool is_acyclic(const EdgeMatrix& edges) {
  const int p = static_cast<int>(edges.rows());
  std::vector<unsigned char> color(static_cast<std::size_t>(p), kWhite);
  for (int v = 0; v < p; ++v) {
    if (color[static_cast<std::size_t>(v)] == kWhite &&
        dfs_has_cycle(edges, v, color)) {
      return false;
    }
  }
  return true;
}

bool has_path(const EdgeMatrix& edges, int from, int to) {
  if (from == to) return true;
  const int p = static_cast<int>(edges.rows());
  std::vector<unsigned char> seen(static_cast<std::size_t>(p), 0);
  std::vector<int> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int j = 0; j < p; ++j) {
      if (edges(j, v) == 0 || seen[static_cast<std::size_t>(j)]) continue;
      if (j == to) return true;
      seen[static_cast<std::size_t>(j)] = 1;
      stack.push_back(j);
    }
  }
  return false;
}

std::vector<int> topological_order(const EdgeMatrix& edges) {
  const int p = static_cast<int>(edges.rows());
  std::vector<int> in_degree(static_cast<std::size_t>(p), 0);
  for (int j = 0; j < p; ++j) {
    for (int l = 0; l < p; ++l) {
      if (edges(j, l)) ++in_degree[static_cast<std::size_t>(j)];
    }
  }
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(p));
  std::vector<int> frontier;
  for (int v = 0; v < p; ++v) {
    if (in_degree[static_cast<std::size_t>(v)] == 0) frontier.push_back(v);
  }
  while (!frontier.empty()) {
    const int v = frontier.back();
    frontier.pop_back();
    order.push_back(v);
    for (int j = 0; j < p; ++j) {
      if (edges(j, v) && --in_degree[static_cast<std::size_t>(j)] == 0) {
        frontier.push_back(j);
      }
    }
  }
  if (static_cast<int>(order.size()) != p) {
    throw std::runtime_error("topological_order: graph has a cycle");
  }
  return order;
}

BackgroundKnowledge BackgroundKnowledge::from_roles(const std::vector<Role>& roles) {
  BackgroundKnowledge bk;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == Role::Root) bk.root_nodes.insert(static_cast<int>(i));
    if (roles[i] == Role::Sink) bk.sink_nodes.insert(static_cast<int>(i));
  }
  return bk;
}

void BackgroundKnowledge::validate(int p) const {
  for (int r : root_nodes) {
    if (r < 0 || r >= p) throw std::invalid_argument("root index out of range");
    if (sink_nodes.count(r)) {
      throw std::invalid_argument("variable " + std::to_string(r) +
                                  " declared both root and sink");
    }
  }
  for (int s : sink_nodes) {
    if (s < 0 || s >= p) throw std::invalid_argument("sink index out of range");
  }
}

}  // namespace bnlte
