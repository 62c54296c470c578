#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "causal/graph.hpp"

namespace causal::testing {

/// Every DAG on the given labeled vertices, built by enumerating the
/// three states (absent, forward, backward) of each unordered pair and
/// keeping the acyclic results. 543 graphs for 4 vertices.
inline std::vector<Dag> all_dags(std::vector<std::string> names) {
  int n = static_cast<int>(names.size());
  std::vector<std::pair<int, int>> slots;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) slots.push_back({i, j});
  std::vector<Dag> out;
  long total = 1;
  for (size_t i = 0; i < slots.size(); ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<std::pair<int, int>> edges;
    for (auto [i, j] : slots) {
      int state = c % 3;
      c /= 3;
      if (state == 1) edges.push_back({i, j});
      if (state == 2) edges.push_back({j, i});
    }
    try {
      out.emplace_back(names, edges);
    } catch (const GraphError&) {
      // cyclic orientation; skip
    }
  }
  return out;
}

/// Reference d-separation: enumerate every simple path between x and y
/// and apply the activity definition vertex by vertex. Exponential;
/// test oracle only.
inline bool dsep_by_paths(const Dag& dag, int x, int y, VSet z) {
  int n = dag.num_vertices();
  std::vector<int> path{x};
  VSet visited = vset_add(0, x);
  std::function<bool()> active_path_exists = [&]() {
    int tail = path.back();
    if (tail == y) {
      for (size_t i = 1; i + 1 < path.size(); ++i) {
        int prev = path[i - 1], v = path[i], next = path[i + 1];
        bool collider = dag.has_edge(prev, v) && dag.has_edge(next, v);
        if (collider) {
          VSet v_or_desc = vset_add(dag.descendants(v), v);
          if ((v_or_desc & z) == 0) return false;
        } else if (vset_contains(z, v)) {
          return false;
        }
      }
      return true;
    }
    for (int next = 0; next < n; ++next) {
      if (vset_contains(visited, next) || !dag.adjacent(tail, next)) continue;
      path.push_back(next);
      visited = vset_add(visited, next);
      bool found = active_path_exists();
      path.pop_back();
      visited = vset_remove(visited, next);
      if (found) return true;
    }
    return false;
  };
  return !active_path_exists();
}

/// Bitmask of all d-separation facts of a small DAG, one bit per
/// (pair, conditioning set) combination; equal signatures mean equal
/// independence models.
inline std::vector<bool> dsep_signature(const Dag& dag) {
  int n = dag.num_vertices();
  VSet all = (VSet{1} << n) - 1;
  std::vector<bool> sig;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      VSet rest = vset_remove(vset_remove(all, x), y);
      for (VSet z = 0;; z = ((z - rest) & rest)) {
        sig.push_back(is_d_separated(dag, x, y, z));
        if (z == rest) break;
      }
    }
  return sig;
}

}  // namespace causal::testing
