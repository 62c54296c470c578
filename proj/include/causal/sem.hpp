#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "causal/graph.hpp"

namespace causal {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RejectionExhausted : std::runtime_error {
  double acceptance_rate;
  RejectionExhausted(const std::string& msg, double rate)
      : std::runtime_error(msg), acceptance_rate(rate) {}
};

/// Symmetric positive-definite covariance, indexed like its vertex list.
struct CovMatrix {
  enum class Kind { Population, Sample };

  std::vector<std::string> names;
  Eigen::MatrixXd m;
  Kind kind = Kind::Population;
  long sample_n = 0;  // meaningful for Kind::Sample

  int size() const { return static_cast<int>(names.size()); }
  void validate(double sym_tol = 1e-12) const;
};

/// Recursive linear Gaussian structural equation model: X = BX + eps.
struct LinearSem {
  Dag dag;
  std::map<std::pair<int, int>, double> coefficients;  // (parent, child) -> b
  std::vector<double> error_variances;                 // per vertex, > 0

  double coef(int parent, int child) const;
  /// e(X -> Z) convention: 0 for a missing edge.
  double edge_coef_or_zero(int parent, int child) const;
  /// e(X -- Z): the coefficient of whichever direction is present.
  double undirected_edge_coef(int x, int z) const;
  void validate() const;
};

/// Sigma = (I-B)^{-1} var(E) (I-B)^{-T}, in canonical vertex order.
CovMatrix implied_covariance(const LinearSem& sem);

/// rho(x, y | w) from the precision of the covariance submatrix over
/// {x,y} union w: -P[i,j] / sqrt(P[i,i] P[j,j]).
double partial_correlation(const CovMatrix& cov, int x, int y, VSet w);

/// Population conditional-independence oracle: independent iff
/// |rho(x,y|w)| < zero_tol.
class PopulationOracle {
 public:
  PopulationOracle(const LinearSem& sem, double zero_tol = 1e-9);

  bool independent(int x, int y, VSet w) const;
  double pcorr(int x, int y, VSet w) const;
  const CovMatrix& covariance() const { return cov_; }
  double zero_tol() const { return zero_tol_; }

 private:
  CovMatrix cov_;
  double zero_tol_;
};

inline PopulationOracle population_oracle(const LinearSem& sem,
                                          double zero_tol = 1e-9) {
  return PopulationOracle(sem, zero_tol);
}

/// Rescale coefficients and error variances so every implied variance
/// is 1. Preserves all partial correlations exactly.
LinearSem standardize(const LinearSem& sem);

struct ModelClassParams {
  double k = 0.3;   // in (0, 1]
  double J = 0.05;  // > 0
  double C = 0.95;  // in (0, 1)
  void validate() const;
};

struct TriangleViolation {
  Triple triple;  // middle is the vertex whose collider status was read
  VSet w;
  double rho;        // rho(a, b | w)
  double edge_coef;  // e(a -- b)
};

/// Violations of the k-Triangle-Faithfulness assumption. Requires a
/// standardized model. Empty result means the assumption holds.
std::vector<TriangleViolation> check_k_triangle_faithfulness(
    const LinearSem& sem, double k);

/// min over X of var(X | V \ {X}) >= J, via the full precision matrix.
bool check_nvv(const LinearSem& sem, double J);
double min_conditional_variance(const LinearSem& sem);

/// max over x, y, W of |rho(x, y | W)| <= C.
bool check_ubc(const LinearSem& sem, double C);
double max_partial_correlation(const LinearSem& sem);

struct Lemma2Record {
  int parent, child;
  VSet ancestral_set;
  double rho;
  double coef;
  bool holds;
};

/// For every edge Xi -> Xj and every ancestral set containing both but
/// no other descendant of Xj: |b|/sqrt(J) >= |rho| >= |b|*sqrt(J).
std::vector<Lemma2Record> lemma2_records(const LinearSem& sem, double J,
                                         double slack = 0.0);
bool verify_lemma2(const LinearSem& sem, double J, double slack = 0.0);

struct RandomSemConfig {
  int n_vars = 5;
  double edge_prob = 0.4;
  double coef_min = 0.2;  // magnitude range; sign is random
  double coef_max = 0.9;
  ModelClassParams params;
  std::uint64_t seed = 0;
  int max_attempts_per_model = 10;
};

/// Random DAG from a uniform vertex order plus independent edge
/// indicators.
Dag random_dag(int n_vars, double edge_prob, std::mt19937_64& rng,
               const std::vector<std::string>* names = nullptr);

/// Random standardized SEM with coefficients uniform on
/// +-[coef_min, coef_max]; no model-class acceptance applied.
LinearSem random_sem_unchecked(int n_vars, double edge_prob, double coef_min,
                               double coef_max, std::mt19937_64& rng);

struct RandomSemResult {
  LinearSem sem;
  int attempts;  // draws taken until acceptance
};

/// Rejection-sample a member of the model class psi^{k,J,C}.
/// Deterministic given the seed; throws RejectionExhausted when the
/// attempt budget runs out.
RandomSemResult random_sem(const RandomSemConfig& config);

/// Row-major i.i.d. sample matrix.
struct Dataset {
  std::vector<std::string> names;
  Eigen::MatrixXd data;  // n x p

  long n() const { return data.rows(); }
  int num_vars() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const;
  void validate() const;
};

/// n i.i.d. draws via the structural equations in topological order.
Dataset sample(const LinearSem& sem, long n, std::uint64_t seed);

/// cov(target, predictors) * var^{-1}(predictors).
std::vector<double> regression_coefficients(const CovMatrix& cov, int target,
                                            const std::vector<int>& predictors);

/// Four-vertex model X -> Y <- Z, X -> W -> Z whose parameters are
/// solved so that rho(X, Z | Y) = 0 exactly: the two paths active given
/// {Y} cancel. The one extra independence not entailed by the DAG.
LinearSem path_cancellation_sem(double b_wx = 0.8, double b_zw = 0.8,
                                double b_yx = 0.5);

// --- serialization ---

nlohmann::json sem_to_json(const LinearSem& sem);
LinearSem sem_from_json(const nlohmann::json& j);

std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(std::istream& in);
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

}  // namespace causal
