#include "causal/citest.hpp"

#include <cmath>

#include "causal/stats.hpp"

namespace causal {

void TestConfig::validate() const {
  if (!(alpha > 0 && alpha < 1))
    throw NumericalError("alpha must be in (0,1)");
  if (!(margin_L >= 0)) throw NumericalError("margin L must be >= 0");
  if (!(zero_tol > 0)) throw NumericalError("zero_tol must be positive");
}

CovMatrix sample_covariance(const Dataset& data) {
  data.validate();
  long n = data.n();
  Eigen::RowVectorXd mean = data.data.colwise().mean();
  Eigen::MatrixXd centered = data.data.rowwise() - mean;
  CovMatrix cov;
  cov.names = data.names;
  cov.m = centered.transpose() * centered /
          static_cast<double>(n > 1 ? n - 1 : 1);
  cov.kind = CovMatrix::Kind::Sample;
  cov.sample_n = n;
  return cov;
}

double sample_partial_correlation(const Dataset& data, int x, int y, VSet w) {
  if (data.n() <= vset_size(w) + 2)
    throw NumericalError("sample too small for partial correlation with " +
                         std::to_string(vset_size(w)) +
                         " conditioning variables");
  CovMatrix cov = sample_covariance(data);
  return partial_correlation(cov, x, y, w);
}

int zero_pcorr_test(double r_hat, long n, int cond_size, double alpha) {
  if (!(std::abs(r_hat) <= 1.0))
    throw NumericalError("partial correlation estimate out of [-1,1]");
  if (n <= cond_size + 3)
    throw NumericalError("sample too small for Fisher z test");
  const double cap = 1.0 - 1e-12;  // degenerate +-1 estimates
  double r = std::clamp(r_hat, -cap, cap);
  double z = 0.5 * std::log((1 + r) / (1 - r));
  double stat = std::sqrt(static_cast<double>(n - cond_size - 3)) * std::abs(z);
  return stat > normal_quantile(1 - alpha / 2) ? 1 : 0;
}

int margin_test(double r_u, double r_w, double L) {
  if (!(std::abs(r_u) <= 1 && std::abs(r_w) <= 1))
    throw NumericalError("margin test inputs must be in [-1,1]");
  if (!(L >= 0)) throw NumericalError("margin L must be >= 0");
  return std::abs(r_u - r_w) >= L ? 0 : 1;
}

namespace {

template <typename TestFn>
MarkovTestResult markov_battery(const Dag& dag, TestFn&& independent) {
  int n = dag.num_vertices();
  bool untestable = false;
  for (int x = 0; x < n; ++x) {
    VSet parents = dag.parents(x);
    VSet nondesc_nonparent = 0;
    for (int y = 0; y < n; ++y) {
      if (y == x || vset_contains(parents, y)) continue;
      if (vset_contains(dag.descendants(x), y)) continue;
      nondesc_nonparent = vset_add(nondesc_nonparent, y);
    }
    for (int y : vset_to_vector(nondesc_nonparent)) {
      std::optional<bool> indep = independent(x, y, parents);
      if (!indep) {
        untestable = true;
        continue;
      }
      if (!*indep) return MarkovTestResult::Violated;
    }
  }
  return untestable ? MarkovTestResult::Untestable
                    : MarkovTestResult::Satisfied;
}

}  // namespace

MarkovTestResult markov_condition_test(const Dag& dag, const CovMatrix& cov,
                                       long n, double alpha) {
  return markov_battery(dag, [&](int x, int y, VSet w) -> std::optional<bool> {
    if (n <= vset_size(w) + 3) return std::nullopt;
    double r = partial_correlation(cov, x, y, w);
    return zero_pcorr_test(r, n, vset_size(w), alpha) == 0;
  });
}

MarkovTestResult markov_condition_test(const Dag& dag, const Dataset& data,
                                       double alpha) {
  if (dag.names() != data.names)
    throw GraphError("markov_condition_test: variable mismatch");
  CovMatrix cov = sample_covariance(data);
  return markov_condition_test(dag, cov, data.n(), alpha);
}

MarkovTestResult markov_condition_test(const Dag& dag,
                                       const PopulationOracle& oracle) {
  return markov_battery(dag, [&](int x, int y, VSet w) -> std::optional<bool> {
    return oracle.independent(x, y, w);
  });
}

}  // namespace causal
