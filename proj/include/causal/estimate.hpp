#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "causal/search.hpp"

namespace causal {

enum class EstimateKind { Value, Zero, Unknown };

struct EdgeEstimate {
  EstimateKind kind = EstimateKind::Unknown;
  double value = 0.0;         // meaningful for Kind::Value
  std::string provenance;     // which step produced it (E3, E4(i), ...)
};

/// Per ordered vertex pair: a coefficient estimate, an asserted zero, or
/// Unknown. Every ordered pair of distinct vertices has an entry.
struct EdgeEstimates {
  std::vector<std::string> names;
  std::map<std::pair<int, int>, EdgeEstimate> pairs;
  std::vector<std::string> diagnostics;

  const EdgeEstimate& at(int from, int to) const;
};

/// E1-E4: run the sample-mode searches, and if V5 confirms the
/// nonadjacencies, read zero estimates off nonadjacent pairs and
/// regression estimates off edges into fully oriented vertices. An edge
/// belonging to an ambiguous triple counts as unoriented. A singular
/// regression demotes that vertex's estimates to Unknown with a
/// diagnostic rather than failing.
EdgeEstimates edge_estimation(const Dataset& data, const TestConfig& config);

/// The E3/E4 tail given an existing vcsgs result and the sample
/// covariance it was computed from; edge_estimation is this composed
/// with vcsgs, and the harness reuses the pieces separately.
EdgeEstimates estimate_from_search(const SearchResult& search,
                                   const CovMatrix& cov);

/// max over ordered pairs of |estimate - truth coefficient|, where
/// Unknown contributes 0, Zero contributes the magnitude of the true
/// coefficient, and a Value on an edge the truth orients the other way
/// also pays the full magnitude of the true reversed coefficient.
double structural_distance(const EdgeEstimates& est, const LinearSem& truth);

nlohmann::json estimates_to_json(const EdgeEstimates& est);

}  // namespace causal
