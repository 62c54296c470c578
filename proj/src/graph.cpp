#include "causal/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace causal {

std::vector<int> vset_to_vector(VSet s) {
  std::vector<int> out;
  for (int v = 0; s >> v; ++v)
    if (vset_contains(s, v)) out.push_back(v);
  return out;
}

namespace {

int find_index(const std::vector<std::string>& names, const std::string& name) {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw GraphError("unknown vertex identifier: " + name);
}

void check_names(const std::vector<std::string>& names) {
  if (names.size() > 32) throw GraphError("at most 32 vertices supported");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size())
    throw GraphError("duplicate vertex identifiers");
}

}  // namespace

Dag::Dag(std::vector<std::string> names,
         const std::vector<std::pair<int, int>>& edges)
    : n_(static_cast<int>(names.size())), names_(std::move(names)) {
  check_names(names_);
  edge_.assign(static_cast<size_t>(n_) * n_, 0);
  parents_.assign(n_, 0);
  children_.assign(n_, 0);
  for (auto [p, c] : edges) {
    check_vertex(p);
    check_vertex(c);
    if (p == c) throw GraphError("self-loop on " + names_[p]);
    if (edge_[c * n_ + p])
      throw GraphError("both orientations present between " + names_[p] +
                       " and " + names_[c]);
    edge_[p * n_ + c] = 1;
    parents_[c] = vset_add(parents_[c], p);
    children_[p] = vset_add(children_[p], c);
  }
  // Kahn topological sort, lowest index first; also the cycle check.
  std::vector<int> indeg(n_);
  for (int v = 0; v < n_; ++v) indeg[v] = vset_size(parents_[v]);
  std::set<int> ready;
  for (int v = 0; v < n_; ++v)
    if (indeg[v] == 0) ready.insert(v);
  while (!ready.empty()) {
    int v = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(v);
    for (int c : vset_to_vector(children_[v]))
      if (--indeg[c] == 0) ready.insert(c);
  }
  if (static_cast<int>(topo_.size()) != n_)
    throw GraphError("directed cycle detected");

  ancestors_.assign(n_, 0);
  descendants_.assign(n_, 0);
  for (int v : topo_) {
    for (int p : vset_to_vector(parents_[v]))
      ancestors_[v] |= vset_add(ancestors_[p], p);
  }
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    for (int c : vset_to_vector(children_[*it]))
      descendants_[*it] |= vset_add(descendants_[c], c);
  }
}

Dag Dag::from_named_edges(
    std::vector<std::string> names,
    const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<std::pair<int, int>> idx;
  idx.reserve(edges.size());
  for (const auto& [a, b] : edges)
    idx.emplace_back(find_index(names, a), find_index(names, b));
  return Dag(std::move(names), idx);
}

int Dag::index_of(const std::string& name) const {
  return find_index(names_, name);
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int p = 0; p < n_; ++p)
    for (int c = 0; c < n_; ++c)
      if (edge_[p * n_ + c]) out.emplace_back(p, c);
  return out;
}

int Dag::num_edges() const { return static_cast<int>(edges().size()); }

std::vector<Triple> Dag::unshielded_triples() const {
  std::vector<Triple> out;
  for (int m = 0; m < n_; ++m)
    for (int a = 0; a < n_; ++a)
      for (int b = a + 1; b < n_; ++b) {
        if (a == m || b == m) continue;
        if (adjacent(a, m) && adjacent(m, b) && !adjacent(a, b))
          out.emplace_back(a, m, b);
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Triple> Dag::unshielded_colliders() const {
  std::vector<Triple> out;
  for (const Triple& t : unshielded_triples())
    if (is_collider(t)) out.push_back(t);
  return out;
}

std::vector<Triple> Dag::triangles() const {
  std::vector<Triple> out;
  for (int m = 0; m < n_; ++m)
    for (int a = 0; a < n_; ++a)
      for (int b = a + 1; b < n_; ++b) {
        if (a == m || b == m) continue;
        if (adjacent(a, m) && adjacent(m, b) && adjacent(a, b))
          out.emplace_back(a, m, b);
      }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_d_separated(const Dag& dag, int x, int y, VSet z) {
  dag.check_vertex(x);
  dag.check_vertex(y);
  if (x == y) throw GraphError("d-separation requires x != y");
  if (vset_contains(z, x) || vset_contains(z, y))
    throw GraphError("conditioning set must exclude x and y");

  // Reachability in the moralized graph over the ancestral closure of
  // {x, y} union z, after deleting z.
  VSet anc = ancestral_closure(dag, vset_add(vset_add(z, x), y));
  int n = dag.num_vertices();
  std::vector<VSet> nbr(n, 0);
  auto connect = [&](int a, int b) {
    nbr[a] = vset_add(nbr[a], b);
    nbr[b] = vset_add(nbr[b], a);
  };
  for (int c = 0; c < n; ++c) {
    if (!vset_contains(anc, c)) continue;
    auto ps = vset_to_vector(dag.parents(c) & anc);
    for (int p : ps) connect(p, c);
    for (size_t i = 0; i < ps.size(); ++i)
      for (size_t j = i + 1; j < ps.size(); ++j) connect(ps[i], ps[j]);
  }
  VSet blocked = z;
  VSet reached = vset_add(VSet{0}, x);
  std::deque<int> queue{x};
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : vset_to_vector(nbr[v] & ~reached & ~blocked)) {
      if (w == y) return false;
      reached = vset_add(reached, w);
      queue.push_back(w);
    }
  }
  return true;
}

VSet ancestral_closure(const Dag& dag, VSet seed) {
  VSet out = seed;
  for (int v : vset_to_vector(seed)) out |= dag.ancestors(v);
  return out;
}

bool markov_equivalent(const Dag& g1, const Dag& g2) {
  if (g1.names() != g2.names())
    throw GraphError("markov_equivalent: mismatched vertex sets");
  int n = g1.num_vertices();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (g1.adjacent(a, b) != g2.adjacent(a, b)) return false;
  return g1.unshielded_colliders() == g2.unshielded_colliders();
}

PartialGraph::PartialGraph(std::vector<std::string> names)
    : n_(static_cast<int>(names.size())), names_(std::move(names)) {
  check_names(names_);
  dir_.assign(static_cast<size_t>(n_) * n_, 0);
  undir_.assign(static_cast<size_t>(n_) * n_, 0);
}

PartialGraph::PartialGraph(const Dag& dag) : PartialGraph(dag.names()) {
  for (auto [p, c] : dag.edges()) add_directed(p, c);
}

int PartialGraph::index_of(const std::string& name) const {
  return find_index(names_, name);
}

void PartialGraph::add_directed(int from, int to) {
  check_vertex(from);
  check_vertex(to);
  if (from == to) throw GraphError("self-loop");
  if (adjacent(from, to) && !has_directed(from, to))
    throw GraphError("edge already present between " + names_[from] + " and " +
                     names_[to]);
  dir_[from * n_ + to] = 1;
}

void PartialGraph::add_undirected(int x, int y) {
  check_vertex(x);
  check_vertex(y);
  if (x == y) throw GraphError("self-loop");
  if (adjacent(x, y) && !has_undirected(x, y))
    throw GraphError("edge already present between " + names_[x] + " and " +
                     names_[y]);
  undir_[x * n_ + y] = undir_[y * n_ + x] = 1;
}

void PartialGraph::remove_edge(int x, int y) {
  check_vertex(x);
  check_vertex(y);
  dir_[x * n_ + y] = dir_[y * n_ + x] = 0;
  undir_[x * n_ + y] = undir_[y * n_ + x] = 0;
}

void PartialGraph::orient(int from, int to) {
  if (has_directed(from, to)) return;
  if (has_directed(to, from))
    throw GraphError("orientation conflict: " + names_[to] + " -> " +
                     names_[from] + " already directed");
  if (!has_undirected(from, to))
    throw GraphError("no undirected edge between " + names_[from] + " and " +
                     names_[to]);
  undir_[from * n_ + to] = undir_[to * n_ + from] = 0;
  dir_[from * n_ + to] = 1;
}

VSet PartialGraph::adjacencies(int v) const {
  VSet s = 0;
  for (int w = 0; w < n_; ++w)
    if (w != v && adjacent(v, w)) s = vset_add(s, w);
  return s;
}

VSet PartialGraph::directed_parents(int v) const {
  VSet s = 0;
  for (int w = 0; w < n_; ++w)
    if (has_directed(w, v)) s = vset_add(s, w);
  return s;
}

VSet PartialGraph::directed_children(int v) const {
  VSet s = 0;
  for (int w = 0; w < n_; ++w)
    if (has_directed(v, w)) s = vset_add(s, w);
  return s;
}

VSet PartialGraph::undirected_neighbors(int v) const {
  VSet s = 0;
  for (int w = 0; w < n_; ++w)
    if (w != v && has_undirected(v, w)) s = vset_add(s, w);
  return s;
}

std::vector<Triple> PartialGraph::unshielded_triples() const {
  std::vector<Triple> out;
  for (int m = 0; m < n_; ++m)
    for (int a = 0; a < n_; ++a)
      for (int b = a + 1; b < n_; ++b) {
        if (a == m || b == m) continue;
        if (adjacent(a, m) && adjacent(m, b) && !adjacent(a, b))
          out.emplace_back(a, m, b);
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> PartialGraph::directed_edges() const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b)
      if (dir_[a * n_ + b]) out.emplace_back(a, b);
  return out;
}

std::vector<Pair> PartialGraph::undirected_edges() const {
  std::vector<Pair> out;
  for (int a = 0; a < n_; ++a)
    for (int b = a + 1; b < n_; ++b)
      if (undir_[a * n_ + b]) out.emplace_back(a, b);
  return out;
}

int PartialGraph::num_edges() const {
  return static_cast<int>(directed_edges().size() + undirected_edges().size());
}

std::optional<TripleMark> ExtendedPattern::mark_of(const Triple& t) const {
  auto it = triple_marks.find(t);
  if (it == triple_marks.end()) return std::nullopt;
  return it->second;
}

std::vector<Triple> ExtendedPattern::ambiguous_triples() const {
  std::vector<Triple> out;
  for (const auto& [t, m] : triple_marks)
    if (m == TripleMark::Ambiguous) out.push_back(t);
  return out;
}

namespace {

// One pass of the S4 rules over `ep.g`; returns true if something was
// oriented. In strict mode a conflicting application throws GraphError;
// in lenient mode it is skipped.
bool run_rules_once(ExtendedPattern& ep, bool lenient) {
  PartialGraph& g = ep.g;
  int n = g.num_vertices();
  bool changed = false;
  auto noncollider = [&](int a, int m, int b) {
    auto mk = ep.mark_of(Triple(a, m, b));
    return mk && *mk == TripleMark::Noncollider;
  };
  auto try_orient = [&](int from, int to) {
    if (g.has_directed(from, to)) return;
    if (g.has_directed(to, from)) {
      if (lenient) return;
      throw GraphError("orientation rules would create a directed 2-cycle "
                       "between " +
                       g.name(from) + " and " + g.name(to));
    }
    if (!g.has_undirected(from, to)) return;
    g.orient(from, to);
    changed = true;
  };
  // (i) X -> Y -- Z with <X,Y,Z> marked noncollider: orient Y -> Z.
  // The candidate scan includes Z -> Y edges so that marks contradicting
  // an existing orientation surface as a conflict instead of being
  // silently skipped.
  for (int y = 0; y < n; ++y)
    for (int x : vset_to_vector(g.directed_parents(y)))
      for (int z : vset_to_vector(g.undirected_neighbors(y) |
                                  g.directed_parents(y))) {
        if (z == x || g.adjacent(x, z)) continue;
        if (noncollider(x, y, z)) try_orient(y, z);
      }
  // (ii) X -> Y -> Z with X -- Z: orient X -> Z.
  for (int y = 0; y < n; ++y)
    for (int x : vset_to_vector(g.directed_parents(y)))
      for (int z : vset_to_vector(g.directed_children(y))) {
        if (z == x) continue;
        if (g.has_undirected(x, z)) try_orient(x, z);
      }
  // (iii) X -> Y <- Z, <X,W,Z> marked noncollider, W -- Y: orient W -> Y.
  for (int y = 0; y < n; ++y) {
    auto ps = vset_to_vector(g.directed_parents(y));
    for (size_t i = 0; i < ps.size(); ++i)
      for (size_t j = 0; j < ps.size(); ++j) {
        int x = ps[i], z = ps[j];
        if (x >= z || g.adjacent(x, z)) continue;
        for (int w : vset_to_vector(g.undirected_neighbors(y) |
                                    g.directed_children(y))) {
          if (w == x || w == z) continue;
          if (g.adjacent(x, w) && g.adjacent(w, z) && noncollider(x, w, z))
            try_orient(w, y);
        }
      }
  }
  return changed;
}

}  // namespace

ExtendedPattern apply_orientation_rules(const ExtendedPattern& ep) {
  ExtendedPattern out = ep;
  while (run_rules_once(out, false)) {
  }
  return out;
}

ExtendedPattern apply_orientation_rules_lenient(const ExtendedPattern& ep) {
  ExtendedPattern out = ep;
  while (run_rules_once(out, true)) {
  }
  return out;
}

std::optional<ExtendedPattern> try_apply_orientation_rules(
    const ExtendedPattern& ep) {
  try {
    return apply_orientation_rules(ep);
  } catch (const GraphError&) {
    return std::nullopt;
  }
}

std::optional<Dag> try_extend_to_dag(const PartialGraph& g) {
  // Dor-Tarsi: repeatedly find a vertex v with no outgoing directed
  // edges whose undirected neighbors are adjacent to all of v's
  // neighbors; orient v's undirected edges into v and retire v.
  int n = g.num_vertices();
  PartialGraph work = g;
  std::vector<std::pair<int, int>> result_edges = g.directed_edges();
  VSet active = n == 32 ? ~VSet{0} : (VSet{1} << n) - 1;
  while (active) {
    bool found = false;
    for (int v : vset_to_vector(active)) {
      if (work.directed_children(v) & active) continue;
      VSet und = work.undirected_neighbors(v) & active;
      VSet adj = work.adjacencies(v) & active;
      bool ok = true;
      for (int u : vset_to_vector(und)) {
        for (int w : vset_to_vector(vset_remove(adj, u)))
          if (!work.adjacent(u, w)) {
            ok = false;
            break;
          }
        if (!ok) break;
      }
      if (!ok) continue;
      for (int u : vset_to_vector(und)) {
        result_edges.emplace_back(u, v);
        work.remove_edge(u, v);
      }
      active = vset_remove(active, v);
      found = true;
      break;
    }
    if (!found) return std::nullopt;
  }
  try {
    return Dag(g.names(), result_edges);
  } catch (const GraphError&) {
    return std::nullopt;  // directed part already cyclic
  }
}

Dag extend_to_dag(const Pattern& p) {
  auto d = try_extend_to_dag(p.g);
  if (!d) throw GraphError("pattern has no consistent DAG extension");
  return *d;
}

Pattern pattern_of(const Dag& dag) {
  // Skeleton + unshielded colliders, then the rule closure with every
  // remaining unshielded triple marked noncollider.
  ExtendedPattern ep;
  ep.g = PartialGraph(dag.names());
  for (auto [p, c] : dag.edges()) ep.g.add_undirected(p, c);
  for (const Triple& t : dag.unshielded_triples()) {
    if (dag.is_collider(t)) {
      ep.g.orient(t.a, t.m);
      ep.g.orient(t.b, t.m);
      ep.triple_marks[t] = TripleMark::Collider;
    } else {
      ep.triple_marks[t] = TripleMark::Noncollider;
    }
  }
  ExtendedPattern closed = apply_orientation_rules(ep);
  return Pattern{closed.g};
}

std::vector<Pattern> enumerate_disambiguations(const ExtendedPattern& ep) {
  std::vector<Triple> amb = ep.ambiguous_triples();
  if (amb.size() > 20)
    throw GraphError("too many ambiguous triples to enumerate");
  std::vector<Pattern> out;
  for (std::uint32_t bits = 0; bits < (1u << amb.size()); ++bits) {
    ExtendedPattern cand = ep;
    bool bad = false;
    for (size_t i = 0; i < amb.size(); ++i) {
      const Triple& t = amb[i];
      if (bits & (1u << i)) {
        cand.triple_marks[t] = TripleMark::Collider;
        try {
          cand.g.orient(t.a, t.m);
          cand.g.orient(t.b, t.m);
        } catch (const GraphError&) {
          bad = true;
        }
      } else {
        cand.triple_marks[t] = TripleMark::Noncollider;
      }
      if (bad) break;
    }
    if (bad) continue;
    auto closed = try_apply_orientation_rules(cand);
    if (!closed) continue;
    auto dag = try_extend_to_dag(closed->g);
    if (!dag) continue;
    // The extension must realize every triple mark, in particular the
    // assigned colliders and noncolliders.
    bool consistent = true;
    for (const auto& [t, mk] : closed->triple_marks) {
      if (!dag->is_unshielded(t)) continue;
      bool coll = dag->is_collider(t);
      if (mk == TripleMark::Collider ? !coll : coll) {
        consistent = false;
        break;
      }
    }
    if (!consistent) continue;
    Pattern p = pattern_of(*dag);
    if (std::find(out.begin(), out.end(), p) == out.end())
      out.push_back(std::move(p));
  }
  return out;
}

// --- serialization ---

namespace {

nlohmann::json graph_json(const PartialGraph& g,
                          const std::map<Triple, TripleMark>* tmarks,
                          const std::map<Pair, PairMark>* pmarks) {
  nlohmann::json j;
  j["vertices"] = g.names();
  auto dir = nlohmann::json::array();
  for (auto [a, b] : g.directed_edges())
    dir.push_back({g.name(a), g.name(b)});
  j["directed"] = dir;
  auto und = nlohmann::json::array();
  for (const Pair& p : g.undirected_edges())
    und.push_back({g.name(p.a), g.name(p.b)});
  j["undirected"] = und;
  auto tm = nlohmann::json::array();
  if (tmarks) {
    for (const auto& [t, m] : *tmarks) {
      const char* s = m == TripleMark::Collider     ? "collider"
                      : m == TripleMark::Noncollider ? "noncollider"
                                                     : "ambiguous";
      tm.push_back({{"x", g.name(t.a)},
                    {"y", g.name(t.m)},
                    {"z", g.name(t.b)},
                    {"mark", s}});
    }
  }
  j["triple_marks"] = tm;
  auto pm = nlohmann::json::array();
  if (pmarks) {
    for (const auto& [p, m] : *pmarks) {
      const char* s = m == PairMark::ApparentlyNonadjacent
                          ? "apparently_nonadjacent"
                          : "definitely_nonadjacent";
      pm.push_back({{"a", g.name(p.a)}, {"b", g.name(p.b)}, {"mark", s}});
    }
  }
  j["pair_marks"] = pm;
  return j;
}

}  // namespace

nlohmann::json to_json(const Dag& dag) {
  return graph_json(PartialGraph(dag), nullptr, nullptr);
}

nlohmann::json to_json(const Pattern& p) {
  return graph_json(p.g, nullptr, nullptr);
}

nlohmann::json to_json(const ExtendedPattern& ep) {
  return graph_json(ep.g, &ep.triple_marks, &ep.pair_marks);
}

Dag dag_from_json(const nlohmann::json& j) {
  std::vector<std::string> names = j.at("vertices");
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j.at("directed"))
    edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  if (j.contains("undirected") && !j.at("undirected").empty())
    throw GraphError("DAG serialization must not contain undirected edges");
  return Dag::from_named_edges(std::move(names), edges);
}

ExtendedPattern extended_pattern_from_json(const nlohmann::json& j) {
  ExtendedPattern ep;
  std::vector<std::string> names = j.at("vertices");
  ep.g = PartialGraph(names);
  for (const auto& e : j.at("directed"))
    ep.g.add_directed(ep.g.index_of(e.at(0)), ep.g.index_of(e.at(1)));
  for (const auto& e : j.at("undirected"))
    ep.g.add_undirected(ep.g.index_of(e.at(0)), ep.g.index_of(e.at(1)));
  if (j.contains("triple_marks")) {
    for (const auto& e : j.at("triple_marks")) {
      std::string s = e.at("mark");
      TripleMark m = s == "collider"      ? TripleMark::Collider
                     : s == "noncollider" ? TripleMark::Noncollider
                     : s == "ambiguous"
                         ? TripleMark::Ambiguous
                         : throw GraphError("unknown triple mark: " + s);
      ep.triple_marks[Triple(ep.g.index_of(e.at("x")), ep.g.index_of(e.at("y")),
                             ep.g.index_of(e.at("z")))] = m;
    }
  }
  if (j.contains("pair_marks")) {
    for (const auto& e : j.at("pair_marks")) {
      std::string s = e.at("mark");
      PairMark m = s == "apparently_nonadjacent"
                       ? PairMark::ApparentlyNonadjacent
                   : s == "definitely_nonadjacent"
                       ? PairMark::DefinitelyNonadjacent
                       : throw GraphError("unknown pair mark: " + s);
      ep.pair_marks[Pair(ep.g.index_of(e.at("a")), ep.g.index_of(e.at("b")))] =
          m;
    }
  }
  return ep;
}

std::string to_dot(const Dag& dag) {
  std::ostringstream os;
  os << "digraph G {\n";
  for (const auto& n : dag.names()) os << "  \"" << n << "\";\n";
  for (auto [p, c] : dag.edges())
    os << "  \"" << dag.name(p) << "\" -> \"" << dag.name(c) << "\";\n";
  os << "}\n";
  return os.str();
}

std::string to_dot(const ExtendedPattern& ep) {
  std::ostringstream os;
  os << "digraph G {\n";
  for (const auto& n : ep.g.names()) os << "  \"" << n << "\";\n";
  for (auto [a, b] : ep.g.directed_edges())
    os << "  \"" << ep.g.name(a) << "\" -> \"" << ep.g.name(b) << "\";\n";
  for (const Pair& p : ep.g.undirected_edges())
    os << "  \"" << ep.g.name(p.a) << "\" -> \"" << ep.g.name(p.b)
       << "\" [dir=none];\n";
  for (const auto& [t, m] : ep.triple_marks)
    if (m == TripleMark::Ambiguous)
      os << "  // ambiguous triple <" << ep.g.name(t.a) << ", "
         << ep.g.name(t.m) << ", " << ep.g.name(t.b) << ">\n";
  os << "}\n";
  return os.str();
}

}  // namespace causal
