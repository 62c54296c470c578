#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "causal/estimate.hpp"

using namespace causal;

namespace {

LinearSem collider_sem() {
  // X -> Z <- Y with coefficients 0.6 and 0.7
  Dag dag = Dag::from_named_edges({"X", "Y", "Z"}, {{"X", "Z"}, {"Y", "Z"}});
  LinearSem sem{dag, {{{0, 2}, 0.6}, {{1, 2}, 0.7}}, {1.0, 1.0, 0.15}};
  sem.validate();
  return sem;
}

LinearSem chain_sem() {
  Dag dag = Dag::from_named_edges({"X", "Y", "Z"}, {{"X", "Y"}, {"Y", "Z"}});
  LinearSem sem{dag, {{{0, 1}, 0.6}, {{1, 2}, 0.6}}, {1.0, 0.64, 0.64}};
  sem.validate();
  return sem;
}

}  // namespace

TEST_CASE("collider data: zeros for the nonadjacent pair, values into Z") {
  Dataset data = sample(collider_sem(), 50000, 3);
  EdgeEstimates est = edge_estimation(data, {});
  CHECK(est.at(0, 1).kind == EstimateKind::Zero);
  CHECK(est.at(1, 0).kind == EstimateKind::Zero);
  REQUIRE(est.at(0, 2).kind == EstimateKind::Value);
  REQUIRE(est.at(1, 2).kind == EstimateKind::Value);
  CHECK(est.at(0, 2).value == doctest::Approx(0.6).epsilon(0.05));
  CHECK(est.at(1, 2).value == doctest::Approx(0.7).epsilon(0.05));
  CHECK(est.at(0, 2).provenance == "E4(ii)");
  // the reverse directions of estimated edges stay unknown
  CHECK(est.at(2, 0).kind == EstimateKind::Unknown);

  CHECK(structural_distance(est, collider_sem()) < 0.05);
}

TEST_CASE("chain data: no oriented vertex, so only zeros and unknowns") {
  Dataset data = sample(chain_sem(), 50000, 4);
  EdgeEstimates est = edge_estimation(data, {});
  CHECK(est.at(0, 2).kind == EstimateKind::Zero);
  CHECK(est.at(2, 0).kind == EstimateKind::Zero);
  CHECK(est.at(0, 1).kind == EstimateKind::Unknown);
  CHECK(est.at(1, 0).kind == EstimateKind::Unknown);
  CHECK(est.at(1, 2).kind == EstimateKind::Unknown);
  CHECK(est.at(0, 1).provenance == "E4(iii)");
}

TEST_CASE("unconfirmed V5 leaves every pair unknown") {
  Dataset data = sample(path_cancellation_sem(), 50000, 5);
  EdgeEstimates est = edge_estimation(data, {});
  for (const auto& [pair, e] : est.pairs) {
    CHECK(e.kind == EstimateKind::Unknown);
    CHECK(e.provenance == "E3");
  }
  CHECK(structural_distance(est, path_cancellation_sem()) == 0.0);
}

TEST_CASE("structural distance conventions") {
  LinearSem truth = chain_sem();
  EdgeEstimates all_unknown;
  all_unknown.names = truth.dag.names();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) all_unknown.pairs[{i, j}] = {EstimateKind::Unknown, 0, ""};
  CHECK(structural_distance(all_unknown, truth) == 0.0);

  EdgeEstimates exact = all_unknown;
  exact.pairs[{0, 1}] = {EstimateKind::Value, 0.6, ""};
  exact.pairs[{1, 2}] = {EstimateKind::Value, 0.6, ""};
  exact.pairs[{0, 2}] = {EstimateKind::Zero, 0, ""};
  exact.pairs[{2, 0}] = {EstimateKind::Zero, 0, ""};
  CHECK(structural_distance(exact, truth) == doctest::Approx(0.0));

  // a zero asserted where the truth has coefficient 0.6
  EdgeEstimates false_zero = all_unknown;
  false_zero.pairs[{0, 1}] = {EstimateKind::Zero, 0, ""};
  CHECK(structural_distance(false_zero, truth) >= 0.6);

  // a value on an edge the truth orients the other way pays both pairs
  EdgeEstimates reversed = all_unknown;
  reversed.pairs[{1, 0}] = {EstimateKind::Value, 0.5, ""};  // truth: X -> Y
  CHECK(structural_distance(reversed, truth) >=
        doctest::Approx(0.6));  // the missed true coefficient
}

TEST_CASE("estimates serialize with the documented schema") {
  Dataset data = sample(collider_sem(), 20000, 6);
  EdgeEstimates est = edge_estimation(data, {});
  nlohmann::json j = estimates_to_json(est);
  REQUIRE(j.contains("pairs"));
  bool saw_value = false, saw_zero = false;
  for (const auto& entry : j["pairs"]) {
    REQUIRE(entry.contains("from"));
    REQUIRE(entry.contains("to"));
    REQUIRE(entry.contains("estimate"));
    if (entry["estimate"].is_number()) saw_value = true;
    if (entry["estimate"] == "zero") saw_zero = true;
  }
  CHECK(saw_value);
  CHECK(saw_zero);
}

TEST_CASE("estimation from a search result matches the composed call") {
  Dataset data = sample(collider_sem(), 20000, 7);
  CovMatrix cov = sample_covariance(data);
  CiDecider decider(cov, data.n(), {});
  SearchResult search = vcsgs(decider, V5Variant::All);
  EdgeEstimates a = estimate_from_search(search, cov);
  EdgeEstimates b = edge_estimation(data, {});
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (const auto& [pair, e] : a.pairs) {
    CHECK(e.kind == b.pairs.at(pair).kind);
    if (e.kind == EstimateKind::Value)
      CHECK(e.value == doctest::Approx(b.pairs.at(pair).value));
  }
}

TEST_CASE("vertex mismatch is rejected") {
  EdgeEstimates est;
  est.names = {"A", "B"};
  CHECK_THROWS_AS(structural_distance(est, chain_sem()), GraphError);
}
