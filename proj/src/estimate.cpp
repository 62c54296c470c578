#include "causal/estimate.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace causal {

const EdgeEstimate& EdgeEstimates::at(int from, int to) const {
  auto it = pairs.find({from, to});
  if (it == pairs.end())
    throw GraphError("no estimate entry for the requested pair");
  return it->second;
}

namespace {

// An edge counts as unoriented when it is a leg of some ambiguous
// unshielded triple, even if S4 happened to direct it.
bool edge_in_ambiguous_triple(const ExtendedPattern& ep, int x, int y) {
  for (const auto& [t, mark] : ep.triple_marks) {
    if (mark != TripleMark::Ambiguous) continue;
    Pair leg1(t.a, t.m), leg2(t.m, t.b), e(x, y);
    if (e == leg1 || e == leg2) return true;
  }
  return false;
}

bool fully_oriented(const ExtendedPattern& ep, int z) {
  if (ep.g.undirected_neighbors(z) != 0) return false;
  for (int v : vset_to_vector(ep.g.adjacencies(z)))
    if (edge_in_ambiguous_triple(ep, z, v)) return false;
  return true;
}

}  // namespace

EdgeEstimates estimate_from_search(const SearchResult& search,
                                   const CovMatrix& cov) {
  const ExtendedPattern& ep = search.graph;
  if (ep.g.names() != cov.names)
    throw GraphError("estimate_from_search: variable mismatch");
  int n = ep.g.num_vertices();
  EdgeEstimates est;
  est.names = cov.names;
  const char* fallback =
      search.nonadjacency_confirmed ? "E4(iii)" : "E3";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        est.pairs[{i, j}] = {EstimateKind::Unknown, 0.0, fallback};
  if (!search.nonadjacency_confirmed) return est;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !ep.g.adjacent(i, j))
        est.pairs[{i, j}] = {EstimateKind::Zero, 0.0, "E4(i)"};

  for (int z = 0; z < n; ++z) {
    if (!fully_oriented(ep, z)) continue;
    std::vector<int> parents = vset_to_vector(ep.g.directed_parents(z));
    if (parents.empty()) continue;
    try {
      std::vector<double> coefs = regression_coefficients(cov, z, parents);
      for (size_t k = 0; k < parents.size(); ++k)
        est.pairs[{parents[k], z}] = {EstimateKind::Value, coefs[k], "E4(ii)"};
    } catch (const NumericalError& e) {
      est.diagnostics.push_back("regression for " + cov.names[z] +
                                " is singular; its edges stay Unknown (" +
                                e.what() + ")");
    }
  }
  return est;
}

EdgeEstimates edge_estimation(const Dataset& data, const TestConfig& config) {
  CovMatrix cov = sample_covariance(data);
  CiDecider decider(cov, data.n(), config);
  SearchResult search = vcsgs(decider, V5Variant::All);
  return estimate_from_search(search, cov);
}

double structural_distance(const EdgeEstimates& est, const LinearSem& truth) {
  if (est.names != truth.dag.names())
    throw GraphError("structural_distance: vertex mismatch");
  double dist = 0.0;
  for (const auto& [pair, e] : est.pairs) {
    auto [i, j] = pair;
    double e_true = truth.edge_coef_or_zero(i, j);
    switch (e.kind) {
      case EstimateKind::Unknown:
        break;
      case EstimateKind::Zero:
        dist = std::max(dist, std::abs(e_true));
        break;
      case EstimateKind::Value:
        dist = std::max(dist, std::abs(e.value - e_true));
        if (truth.dag.has_edge(j, i))
          dist = std::max(dist, std::abs(truth.edge_coef_or_zero(j, i)));
        break;
    }
  }
  return dist;
}

nlohmann::json estimates_to_json(const EdgeEstimates& est) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [pair, e] : est.pairs) {
    nlohmann::json entry;
    entry["from"] = est.names[pair.first];
    entry["to"] = est.names[pair.second];
    switch (e.kind) {
      case EstimateKind::Value: entry["estimate"] = e.value; break;
      case EstimateKind::Zero: entry["estimate"] = "zero"; break;
      case EstimateKind::Unknown: entry["estimate"] = "unknown"; break;
    }
    entry["provenance"] = e.provenance;
    pairs.push_back(entry);
  }
  nlohmann::json out;
  out["pairs"] = pairs;
  if (!est.diagnostics.empty()) out["diagnostics"] = est.diagnostics;
  return out;
}

}  // namespace causal
