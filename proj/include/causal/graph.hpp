#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace causal {

/// Vertex set as a bitmask over canonical vertex indices. Graphs are
/// limited to 32 vertices; the search algorithms cap out far earlier.
using VSet = std::uint32_t;

inline bool vset_contains(VSet s, int v) { return (s >> v) & 1u; }
inline VSet vset_add(VSet s, int v) { return s | (VSet{1} << v); }
inline VSet vset_remove(VSet s, int v) { return s & ~(VSet{1} << v); }
inline int vset_size(VSet s) { return __builtin_popcount(s); }

std::vector<int> vset_to_vector(VSet s);

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TripleMark { Collider, Noncollider, Ambiguous };
enum class PairMark { ApparentlyNonadjacent, DefinitelyNonadjacent };

/// Unshielded triple <x, m, z> with middle vertex m. Stored with
/// min(x, z) first so <X,Y,Z> and <Z,Y,X> compare equal.
struct Triple {
  int a;  // smaller endpoint
  int m;  // middle
  int b;  // larger endpoint

  Triple(int x, int middle, int z)
      : a(x < z ? x : z), m(middle), b(x < z ? z : x) {
    if (a == m || m == b || a == b)
      throw GraphError("triple vertices must be distinct");
  }
  auto operator<=>(const Triple&) const = default;
};

/// Unordered vertex pair, stored min-first.
struct Pair {
  int a;
  int b;
  Pair(int x, int y) : a(x < y ? x : y), b(x < y ? y : x) {
    if (a == b) throw GraphError("pair vertices must be distinct");
  }
  auto operator<=>(const Pair&) const = default;
};

/// Directed acyclic graph over named vertices. Immutable after
/// construction; acyclicity is validated eagerly.
class Dag {
 public:
  Dag(std::vector<std::string> names,
      const std::vector<std::pair<int, int>>& edges);

  static Dag from_named_edges(
      std::vector<std::string> names,
      const std::vector<std::pair<std::string, std::string>>& edges);

  int num_vertices() const { return n_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int v) const { return names_.at(v); }
  int index_of(const std::string& name) const;

  bool has_edge(int parent, int child) const {
    check_vertex(parent);
    check_vertex(child);
    return edge_[parent * n_ + child] != 0;
  }
  bool adjacent(int x, int y) const {
    return has_edge(x, y) || has_edge(y, x);
  }

  VSet parents(int v) const { check_vertex(v); return parents_[v]; }
  VSet children(int v) const { check_vertex(v); return children_[v]; }
  VSet adjacencies(int v) const { return parents_[v] | children_[v]; }
  /// Ancestors of v, not including v itself.
  VSet ancestors(int v) const { check_vertex(v); return ancestors_[v]; }
  VSet descendants(int v) const { check_vertex(v); return descendants_[v]; }

  /// One fixed topological order (deterministic: lowest index first).
  const std::vector<int>& topological_order() const { return topo_; }

  std::vector<std::pair<int, int>> edges() const;
  int num_edges() const;

  bool is_collider(const Triple& t) const {
    return has_edge(t.a, t.m) && has_edge(t.b, t.m);
  }
  bool is_unshielded(const Triple& t) const {
    return adjacent(t.a, t.m) && adjacent(t.m, t.b) && !adjacent(t.a, t.b);
  }

  /// All unshielded triples, in canonical order.
  std::vector<Triple> unshielded_triples() const;
  /// The unshielded triples that are colliders.
  std::vector<Triple> unshielded_colliders() const;
  /// All triangles <x, y, z> (each pair adjacent), middle listed per entry.
  std::vector<Triple> triangles() const;

  void check_vertex(int v) const {
    if (v < 0 || v >= n_) throw GraphError("vertex index out of range");
  }

 private:
  int n_ = 0;
  std::vector<std::string> names_;
  std::vector<std::uint8_t> edge_;  // edge_[p*n+c] = 1 iff p -> c
  std::vector<VSet> parents_, children_, ancestors_, descendants_;
  std::vector<int> topo_;
};

/// True iff no acyclic path between x and y is active conditional on z.
/// Implemented by reachability in the moralized ancestral graph.
bool is_d_separated(const Dag& dag, int x, int y, VSet z);

/// Smallest superset of `seed` closed under the ancestor relation.
VSet ancestral_closure(const Dag& dag, VSet seed);

/// Same adjacencies and same unshielded colliders.
bool markov_equivalent(const Dag& g1, const Dag& g2);

/// Mixed graph holding directed and undirected edges over named
/// vertices. The mutable workhorse behind Pattern and ExtendedPattern.
class PartialGraph {
 public:
  PartialGraph() = default;
  explicit PartialGraph(std::vector<std::string> names);
  /// Skeleton-preserving view of a DAG (all edges directed).
  explicit PartialGraph(const Dag& dag);

  int num_vertices() const { return n_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int v) const { return names_.at(v); }
  int index_of(const std::string& name) const;

  bool has_directed(int from, int to) const {
    check_vertex(from);
    check_vertex(to);
    return dir_[from * n_ + to] != 0;
  }
  bool has_undirected(int x, int y) const {
    check_vertex(x);
    check_vertex(y);
    return undir_[x * n_ + y] != 0;
  }
  bool adjacent(int x, int y) const {
    return has_directed(x, y) || has_directed(y, x) || has_undirected(x, y);
  }

  void add_directed(int from, int to);
  void add_undirected(int x, int y);
  void remove_edge(int x, int y);
  /// Turn the undirected edge x -- y into from -> to. Throws if the edge
  /// is absent or already directed the other way.
  void orient(int from, int to);

  VSet adjacencies(int v) const;
  VSet directed_parents(int v) const;
  VSet directed_children(int v) const;
  VSet undirected_neighbors(int v) const;

  bool is_unshielded(const Triple& t) const {
    return adjacent(t.a, t.m) && adjacent(t.m, t.b) && !adjacent(t.a, t.b);
  }
  bool is_directed_collider(const Triple& t) const {
    return has_directed(t.a, t.m) && has_directed(t.b, t.m);
  }

  std::vector<Triple> unshielded_triples() const;
  std::vector<std::pair<int, int>> directed_edges() const;
  std::vector<Pair> undirected_edges() const;
  int num_edges() const;

  bool operator==(const PartialGraph&) const = default;

  void check_vertex(int v) const {
    if (v < 0 || v >= n_) throw GraphError("vertex index out of range");
  }

 private:
  int n_ = 0;
  std::vector<std::string> names_;
  std::vector<std::uint8_t> dir_, undir_;
};

/// A pattern (CPDAG): represents a nonempty Markov equivalence class.
struct Pattern {
  PartialGraph g;
  bool operator==(const Pattern&) const = default;
};

/// CSGS/VCSGS output: a pattern skeleton plus triple marks for
/// unshielded triples and nonadjacency marks for vertex pairs.
struct ExtendedPattern {
  PartialGraph g;
  std::map<Triple, TripleMark> triple_marks;
  std::map<Pair, PairMark> pair_marks;

  std::optional<TripleMark> mark_of(const Triple& t) const;
  std::vector<Triple> ambiguous_triples() const;
  bool operator==(const ExtendedPattern&) const = default;
};

/// Pattern of the Markov equivalence class containing `dag`:
/// skeleton + unshielded colliders + Meek closure.
Pattern pattern_of(const Dag& dag);

/// Fixed point of the three S4 orientation rules (rule (iii) is Meek's
/// rule restricted to explicitly marked noncolliders). Throws
/// GraphError if a rule would re-orient an existing directed edge.
ExtendedPattern apply_orientation_rules(const ExtendedPattern& ep);

/// As above but reports inconsistency as nullopt instead of throwing.
std::optional<ExtendedPattern> try_apply_orientation_rules(
    const ExtendedPattern& ep);

/// Rule closure that skips (rather than reports) conflicting rule
/// applications; used by the sample-mode searches, where inconsistent
/// test outcomes must be absorbed instead of aborting the search.
ExtendedPattern apply_orientation_rules_lenient(const ExtendedPattern& ep);

/// All patterns obtainable by assigning Collider/Noncollider to each
/// ambiguous triple, keeping only assignments that extend to a DAG with
/// exactly the assigned colliders. Deduplicated, deterministic order.
std::vector<Pattern> enumerate_disambiguations(const ExtendedPattern& ep);

/// Consistent extension of a PDAG (Dor-Tarsi): keeps every directed
/// edge, orients every undirected edge, creates no new unshielded
/// collider. nullopt if no such extension exists.
std::optional<Dag> try_extend_to_dag(const PartialGraph& g);

/// Consistent extension of a pattern; throws GraphError if none exists.
Dag extend_to_dag(const Pattern& p);

// --- serialization ---

nlohmann::json to_json(const Dag& dag);
nlohmann::json to_json(const Pattern& p);
nlohmann::json to_json(const ExtendedPattern& ep);
Dag dag_from_json(const nlohmann::json& j);
ExtendedPattern extended_pattern_from_json(const nlohmann::json& j);

std::string to_dot(const Dag& dag);
/// DOT export; ambiguous triples are rendered as comments.
std::string to_dot(const ExtendedPattern& ep);

}  // namespace causal
