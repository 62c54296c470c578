#pragma once

#include <optional>
#include <string>
#include <vector>

#include "causal/graph.hpp"
#include "causal/sem.hpp"

namespace causal {

struct TestConfig {
  double alpha = 0.05;   // per-test significance level
  double margin_L = 0.1; // orientation margin for sample-mode S3*
  double zero_tol = 1e-9;  // population-mode independence threshold

  void validate() const;
};

/// Sample covariance (denominator n-1) of a dataset.
CovMatrix sample_covariance(const Dataset& data);

/// Sample partial correlation via the shared precision-submatrix kernel.
/// Requires n > |w| + 2.
double sample_partial_correlation(const Dataset& data, int x, int y, VSet w);

/// Fisher's z test of rho = 0. Returns 1 (reject) iff
/// sqrt(n - |cond| - 3) * |z| exceeds the two-sided normal quantile.
/// Throws NumericalError when n <= cond_size + 3 (callers must treat
/// this as "cannot test").
int zero_pcorr_test(double r_hat, long n, int cond_size, double alpha);

/// Plug-in margin test: returns 0 (accept "|r_u - r_w| >= L") iff the
/// difference of the two estimates is at least L.
int margin_test(double r_u, double r_w, double L);

enum class MarkovTestResult { Satisfied, Violated, Untestable };

/// Local Markov condition battery: for each vertex X and each
/// nondescendant nonparent Y, test rho(X, Y | Parents(X)) = 0.
MarkovTestResult markov_condition_test(const Dag& dag, const Dataset& data,
                                       double alpha);

/// Same battery against a precomputed sample covariance.
MarkovTestResult markov_condition_test(const Dag& dag, const CovMatrix& cov,
                                       long n, double alpha);

/// Population analogue: the battery evaluated against an exact oracle.
MarkovTestResult markov_condition_test(const Dag& dag,
                                       const PopulationOracle& oracle);

}  // namespace causal
