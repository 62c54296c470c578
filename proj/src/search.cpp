#include "causal/search.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace causal {

std::vector<VSet> subsets_by_size(VSet rest) {
  std::vector<VSet> out;
  VSet w = 0;
  while (true) {
    out.push_back(w);
    if (w == rest) break;
    w = (w - rest) & rest;
  }
  std::stable_sort(out.begin(), out.end(), [](VSet a, VSet b) {
    return vset_size(a) < vset_size(b);
  });
  return out;
}

CiDecider::CiDecider(PopulationOracle oracle, TestConfig config)
    : mode_(Mode::Population),
      oracle_(std::move(oracle)),
      cov_(oracle_->covariance()),
      config_(config) {
  config_.validate();
}

CiDecider::CiDecider(CovMatrix cov, long sample_n, TestConfig config)
    : mode_(Mode::Sample), cov_(std::move(cov)), n_(sample_n),
      config_(config) {
  config_.validate();
  cov_.validate();
  if (n_ < 1) throw NumericalError("sample size must be positive");
}

CiDecider CiDecider::from_dataset(const Dataset& data, TestConfig config) {
  return CiDecider(sample_covariance(data), data.n(), config);
}

std::optional<bool> CiDecider::independent(int x, int y, VSet w) const {
  auto key = std::make_tuple(std::min(x, y), std::max(x, y), w);
  if (auto it = indep_cache_.find(key); it != indep_cache_.end())
    return it->second;
  std::optional<bool> result;
  if (mode_ == Mode::Population) {
    result = oracle_->independent(x, y, w);
  } else if (n_ > vset_size(w) + 3) {
    try {
      double r = partial_correlation(cov_, x, y, w);
      result = zero_pcorr_test(r, n_, vset_size(w), config_.alpha) == 0;
    } catch (const NumericalError&) {
      result = std::nullopt;  // singular conditioning: cannot test
    }
  }
  indep_cache_.emplace(key, result);
  return result;
}

double CiDecider::pcorr(int x, int y, VSet w) const {
  if (mode_ == Mode::Population) return oracle_->pcorr(x, y, w);
  return partial_correlation(cov_, x, y, w);
}

MarkovTestResult CiDecider::markov_test(const Dag& dag) const {
  if (mode_ == Mode::Population) return markov_condition_test(dag, *oracle_);
  return markov_condition_test(dag, cov_, n_, config_.alpha);
}

namespace {

std::string set_to_string(const CiDecider& d, VSet s) {
  std::string out = "{";
  bool first = true;
  for (int v : vset_to_vector(s)) {
    if (!first) out += ",";
    out += d.names()[v];
    first = false;
  }
  return out + "}";
}

void check_search_size(const CiDecider& d) {
  if (d.num_vars() > kMaxSearchVars)
    throw GraphError("search supports at most " +
                     std::to_string(kMaxSearchVars) + " variables, got " +
                     std::to_string(d.num_vars()));
  if (d.num_vars() < 1) throw GraphError("search needs at least one variable");
}

struct Skeleton {
  PartialGraph g;
  std::map<Pair, VSet> sepsets;
};

// S1 + S2 (= V1 + V2): complete undirected graph, then remove each pair
// screened off by some subset of the remaining variables, smallest
// subsets first.
Skeleton adjacency_phase(const CiDecider& d, SearchDiagnostics* diag) {
  int n = d.num_vars();
  Skeleton sk{PartialGraph(d.names()), {}};
  VSet all = n == 32 ? ~VSet{0} : (VSet{1} << n) - 1;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) sk.g.add_undirected(x, y);
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      VSet rest = vset_remove(vset_remove(all, x), y);
      for (VSet s : subsets_by_size(rest)) {
        if (d.independent(x, y, s) == std::optional<bool>(true)) {
          sk.g.remove_edge(x, y);
          sk.sepsets.emplace(Pair(x, y), s);
          if (diag)
            diag->log.push_back("S2: removed " + d.names()[x] + " -- " +
                                d.names()[y] + " given " +
                                set_to_string(d, s));
          break;
        }
      }
    }
  if (diag) diag->separating_sets = sk.sepsets;
  return sk;
}

// Exact-fact triple decision used by the strict S3 and the population
// S3*: whether any conditioning set on each side of the middle vertex
// renders the endpoints independent. Untestable answers never establish
// an independence.
struct TripleFacts {
  bool indep_with_middle = false;
  bool indep_without_middle = false;
};

TripleFacts triple_facts(const CiDecider& d, const Triple& t, VSet all) {
  TripleFacts f;
  VSet rest = vset_remove(vset_remove(all, t.a), t.b);
  for (VSet s : subsets_by_size(rest)) {
    if (d.independent(t.a, t.b, s) != std::optional<bool>(true)) continue;
    if (vset_contains(s, t.m))
      f.indep_with_middle = true;
    else
      f.indep_without_middle = true;
    if (f.indep_with_middle && f.indep_without_middle) break;
  }
  return f;
}

// The sample-mode S3* refinement. Clause 1 (collider): some W without
// the middle whose zero test accepts, while every U with the middle
// rejects and sits at least L away from the W estimate. Clause 2 is the
// mirror image; clause 3 is Ambiguous. Any untestable set defeats the
// clause that quantifies over it.
TripleMark sample_triple_mark(const CiDecider& d, const Triple& t, VSet all) {
  VSet rest = vset_remove(vset_remove(all, t.a), t.b);
  std::vector<VSet> sets = subsets_by_size(rest);
  struct Entry {
    VSet s;
    bool feasible;
    double r;
    bool reject;
  };
  std::vector<Entry> with_m, without_m;
  for (VSet s : sets) {
    Entry e{s, false, 0.0, false};
    if (auto indep = d.independent(t.a, t.b, s)) {
      e.feasible = true;
      e.r = d.pcorr(t.a, t.b, s);
      e.reject = !*indep;
    }
    (vset_contains(s, t.m) ? with_m : without_m).push_back(e);
  }
  double L = d.config().margin_L;
  auto clause = [&](const std::vector<Entry>& w_side,
                    const std::vector<Entry>& u_side) {
    bool all_reject = std::all_of(
        u_side.begin(), u_side.end(),
        [](const Entry& u) { return u.feasible && u.reject; });
    if (!all_reject) return false;
    for (const Entry& w : w_side) {
      if (!w.feasible || w.reject) continue;
      bool ok = std::all_of(u_side.begin(), u_side.end(), [&](const Entry& u) {
        return margin_test(u.r, w.r, L) == 0;
      });
      if (ok) return true;
    }
    return false;
  };
  if (clause(without_m, with_m)) return TripleMark::Collider;
  if (clause(with_m, without_m)) return TripleMark::Noncollider;
  return TripleMark::Ambiguous;
}

// Orient the triples decided as colliders, in canonical order. A triple
// that would re-orient an existing directed edge is downgraded to
// Ambiguous: conflicting evidence is absorbed, not fatal.
void orient_colliders(ExtendedPattern& ep, SearchDiagnostics* diag) {
  for (auto& [t, mark] : ep.triple_marks) {
    if (mark != TripleMark::Collider) continue;
    PartialGraph& g = ep.g;
    if (g.has_directed(t.m, t.a) || g.has_directed(t.m, t.b)) {
      mark = TripleMark::Ambiguous;
      if (diag)
        diag->log.push_back("S3*: collider <" + g.name(t.a) + "," +
                            g.name(t.m) + "," + g.name(t.b) +
                            "> conflicts with an earlier orientation; "
                            "downgraded to ambiguous");
      continue;
    }
    if (g.has_undirected(t.a, t.m)) g.orient(t.a, t.m);
    if (g.has_undirected(t.b, t.m)) g.orient(t.b, t.m);
  }
}

ExtendedPattern csgs_core(const CiDecider& d, bool v_series,
                          SearchDiagnostics* diag) {
  check_search_size(d);
  int n = d.num_vars();
  VSet all = n == 32 ? ~VSet{0} : (VSet{1} << n) - 1;
  Skeleton sk = adjacency_phase(d, diag);
  ExtendedPattern ep{sk.g, {}, {}};
  for (const auto& [pair, s] : sk.sepsets)
    ep.pair_marks.emplace(pair, PairMark::ApparentlyNonadjacent);
  for (const Triple& t : ep.g.unshielded_triples()) {
    TripleMark mark;
    if (d.mode() == CiDecider::Mode::Population) {
      TripleFacts f = triple_facts(d, t, all);
      mark = !f.indep_with_middle      ? TripleMark::Collider
             : !f.indep_without_middle ? TripleMark::Noncollider
                                       : TripleMark::Ambiguous;
    } else {
      mark = sample_triple_mark(d, t, all);
    }
    ep.triple_marks.emplace(t, mark);
    if (v_series && mark == TripleMark::Ambiguous)
      ep.pair_marks[Pair(t.a, t.b)] = PairMark::DefinitelyNonadjacent;
    if (diag) {
      const char* label = mark == TripleMark::Collider      ? "collider"
                          : mark == TripleMark::Noncollider ? "noncollider"
                                                            : "ambiguous";
      diag->log.push_back("S3*: <" + d.names()[t.a] + "," + d.names()[t.m] +
                          "," + d.names()[t.b] + "> " + label);
    }
  }
  orient_colliders(ep, diag);
  return apply_orientation_rules_lenient(ep);
}

}  // namespace

Pattern sgs(const CiDecider& d) {
  check_search_size(d);
  int n = d.num_vars();
  VSet all = n == 32 ? ~VSet{0} : (VSet{1} << n) - 1;
  Skeleton sk = adjacency_phase(d, nullptr);
  ExtendedPattern ep{sk.g, {}, {}};
  for (const Triple& t : ep.g.unshielded_triples()) {
    TripleFacts f = triple_facts(d, t, all);
    if (!f.indep_with_middle) {
      ep.triple_marks.emplace(t, TripleMark::Collider);
    } else if (!f.indep_without_middle) {
      ep.triple_marks.emplace(t, TripleMark::Noncollider);
    } else {
      throw GraphError("faithfulness violation at unshielded triple <" +
                       d.names()[t.a] + "," + d.names()[t.m] + "," +
                       d.names()[t.b] +
                       ">: independence facts support both clauses of S3");
    }
  }
  for (const auto& [t, mark] : ep.triple_marks) {
    if (mark != TripleMark::Collider) continue;
    if (ep.g.has_undirected(t.a, t.m)) ep.g.orient(t.a, t.m);
    if (ep.g.has_undirected(t.b, t.m)) ep.g.orient(t.b, t.m);
  }
  return Pattern{apply_orientation_rules(ep).g};
}

ExtendedPattern csgs(const CiDecider& d, SearchDiagnostics* diag) {
  return csgs_core(d, false, diag);
}

SearchResult vcsgs(const CiDecider& d, V5Variant variant) {
  SearchResult result;
  result.graph = csgs_core(d, true, &result.diagnostics);
  if (variant == V5Variant::Off) return result;
  std::vector<Pattern> patterns = enumerate_disambiguations(result.graph);
  result.diagnostics.patterns_tested = static_cast<int>(patterns.size());
  for (const Pattern& p : patterns) {
    Dag dag = extend_to_dag(p);
    MarkovTestResult mt = d.markov_test(dag);
    bool passed = mt == MarkovTestResult::Satisfied;
    if (passed) ++result.diagnostics.patterns_passed;
    result.diagnostics.log.push_back(
        std::string("V5: pattern ") +
        (passed                                ? "satisfies"
         : mt == MarkovTestResult::Untestable ? "cannot be tested against"
                                               : "violates") +
        " the Markov condition");
  }
  bool confirmed =
      variant == V5Variant::All
          ? !patterns.empty() &&
                result.diagnostics.patterns_passed ==
                    result.diagnostics.patterns_tested
          : result.diagnostics.patterns_passed > 0;
  result.nonadjacency_confirmed = confirmed;
  if (confirmed)
    for (auto& [pair, mark] : result.graph.pair_marks)
      mark = PairMark::DefinitelyNonadjacent;
  return result;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::None: return "none";
    case ErrorKind::KindI: return "kind_I";
    case ErrorKind::KindII: return "kind_II";
    case ErrorKind::KindIII: return "kind_III";
  }
  return "unknown";
}

ErrorKind classify_error(const ExtendedPattern& output, const Dag& truth) {
  if (output.g.names() != truth.names())
    throw GraphError("classify_error: vertex mismatch");
  int n = truth.num_vertices();
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      if (output.g.adjacent(x, y) && !truth.adjacent(x, y))
        return ErrorKind::KindI;
  for (const auto& [t, mark] : output.triple_marks)
    if (mark == TripleMark::Noncollider &&
        truth.has_edge(t.a, t.m) && truth.has_edge(t.b, t.m))
      return ErrorKind::KindII;
  for (auto [from, to] : output.g.directed_edges())
    if (!truth.has_edge(from, to)) return ErrorKind::KindIII;
  return ErrorKind::None;
}

}  // namespace causal
