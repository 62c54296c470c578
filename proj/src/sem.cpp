#include "causal/sem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace causal {

void CovMatrix::validate(double sym_tol) const {
  if (m.rows() != size() || m.cols() != size())
    throw NumericalError("covariance dimension mismatch");
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > sym_tol)
        throw NumericalError("covariance not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError("covariance not positive definite");
}

double LinearSem::coef(int parent, int child) const {
  auto it = coefficients.find({parent, child});
  if (it == coefficients.end())
    throw GraphError("no coefficient for edge " + dag.name(parent) + " -> " +
                     dag.name(child));
  return it->second;
}

double LinearSem::edge_coef_or_zero(int parent, int child) const {
  auto it = coefficients.find({parent, child});
  return it == coefficients.end() ? 0.0 : it->second;
}

double LinearSem::undirected_edge_coef(int x, int z) const {
  if (dag.has_edge(x, z)) return coef(x, z);
  if (dag.has_edge(z, x)) return coef(z, x);
  return 0.0;
}

void LinearSem::validate() const {
  int n = dag.num_vertices();
  if (static_cast<int>(error_variances.size()) != n)
    throw NumericalError("error variance count mismatch");
  for (double v : error_variances)
    if (!(v > 0.0)) throw NumericalError("error variances must be positive");
  size_t edge_count = 0;
  for (const auto& [pc, b] : coefficients) {
    (void)b;
    if (!dag.has_edge(pc.first, pc.second))
      throw GraphError("coefficient for a non-edge");
    ++edge_count;
  }
  if (edge_count != static_cast<size_t>(dag.num_edges()))
    throw GraphError("missing coefficient for some edge");
}

CovMatrix implied_covariance(const LinearSem& sem) {
  sem.validate();
  int n = sem.dag.num_vertices();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);  // I - B
  for (const auto& [pc, b] : sem.coefficients) a(pc.second, pc.first) -= b;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd half = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) half(i, i) = std::sqrt(sem.error_variances[i]);
  Eigen::MatrixXd k = lu.solve(half);  // (I-B)^{-1} var(E)^{1/2}
  CovMatrix cov;
  cov.names = sem.dag.names();
  cov.m = k * k.transpose();
  cov.m = ((cov.m + cov.m.transpose()) / 2).eval();
  cov.kind = CovMatrix::Kind::Population;
  cov.validate();
  return cov;
}

namespace {

std::string set_description(const CovMatrix& cov, const std::vector<int>& idx) {
  std::string s = "{";
  for (size_t i = 0; i < idx.size(); ++i)
    s += (i ? ", " : "") + cov.names[idx[i]];
  return s + "}";
}

}  // namespace

double partial_correlation(const CovMatrix& cov, int x, int y, VSet w) {
  if (x == y) throw NumericalError("partial correlation requires x != y");
  if (vset_contains(w, x) || vset_contains(w, y))
    throw NumericalError("conditioning set must exclude x and y");
  // Schur complement of the conditioning block: only var(w) has to be
  // invertible, so perfectly correlated x, y still yield rho = +-1.
  std::vector<int> ws = vset_to_vector(w);
  int m = static_cast<int>(ws.size());
  Eigen::Matrix2d k;
  k << cov.m(x, x), cov.m(x, y), cov.m(y, x), cov.m(y, y);
  if (m > 0) {
    Eigen::MatrixXd sww(m, m);
    Eigen::MatrixXd sxw(2, m);
    for (int i = 0; i < m; ++i) {
      sxw(0, i) = cov.m(x, ws[i]);
      sxw(1, i) = cov.m(y, ws[i]);
      for (int j = 0; j < m; ++j) sww(i, j) = cov.m(ws[i], ws[j]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sww);
    if (!lu.isInvertible())
      throw NumericalError("singular covariance submatrix over " +
                           set_description(cov, ws));
    k -= sxw * lu.solve(sxw.transpose());
  }
  double denom = k(0, 0) * k(1, 1);
  if (!(denom > 0)) {
    std::vector<int> idx{x, y};
    idx.insert(idx.end(), ws.begin(), ws.end());
    throw NumericalError("degenerate conditional variance over " +
                         set_description(cov, idx));
  }
  double rho = k(0, 1) / std::sqrt(denom);
  return std::clamp(rho, -1.0, 1.0);
}

PopulationOracle::PopulationOracle(const LinearSem& sem, double zero_tol)
    : cov_(implied_covariance(sem)), zero_tol_(zero_tol) {
  if (!(zero_tol > 0)) throw NumericalError("zero_tol must be positive");
}

bool PopulationOracle::independent(int x, int y, VSet w) const {
  return std::abs(partial_correlation(cov_, x, y, w)) < zero_tol_;
}

double PopulationOracle::pcorr(int x, int y, VSet w) const {
  return partial_correlation(cov_, x, y, w);
}

LinearSem standardize(const LinearSem& sem) {
  CovMatrix cov = implied_covariance(sem);
  int n = sem.dag.num_vertices();
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = std::sqrt(cov.m(i, i));
  LinearSem out = sem;
  for (auto& [pc, b] : out.coefficients) b *= s[pc.first] / s[pc.second];
  for (int i = 0; i < n; ++i)
    out.error_variances[i] = sem.error_variances[i] / (s[i] * s[i]);
  return out;
}

void ModelClassParams::validate() const {
  if (!(k > 0 && k <= 1)) throw NumericalError("k must be in (0,1]");
  if (!(J > 0)) throw NumericalError("J must be positive");
  if (!(C > 0 && C < 1)) throw NumericalError("C must be in (0,1)");
}

std::vector<TriangleViolation> check_k_triangle_faithfulness(
    const LinearSem& sem_in, double k) {
  LinearSem sem = standardize(sem_in);
  CovMatrix cov = implied_covariance(sem);
  int n = sem.dag.num_vertices();
  std::vector<TriangleViolation> out;
  for (const Triple& t : sem.dag.triangles()) {
    bool collider = sem.dag.has_edge(t.a, t.m) && sem.dag.has_edge(t.b, t.m);
    double e = sem.undirected_edge_coef(t.a, t.b);
    VSet rest = 0;
    for (int v = 0; v < n; ++v)
      if (v != t.a && v != t.b) rest = vset_add(rest, v);
    for (VSet w = 0;; w = (w - rest) & rest) {
      // clause 1 (noncollider): W must not contain the middle;
      // clause 2 (collider): W must contain it.
      if (vset_contains(w, t.m) == collider) {
        double rho = partial_correlation(cov, t.a, t.b, w);
        if (std::abs(rho) < k * std::abs(e))
          out.push_back({t, w, rho, e});
      }
      if (w == rest) break;
    }
  }
  return out;
}

double min_conditional_variance(const LinearSem& sem_in) {
  LinearSem sem = standardize(sem_in);
  CovMatrix cov = implied_covariance(sem);
  Eigen::MatrixXd prec = cov.m.llt().solve(
      Eigen::MatrixXd::Identity(cov.size(), cov.size()));
  double mn = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cov.size(); ++i) mn = std::min(mn, 1.0 / prec(i, i));
  return mn;
}

bool check_nvv(const LinearSem& sem, double J) {
  return min_conditional_variance(sem) >= J;
}

double max_partial_correlation(const LinearSem& sem_in) {
  LinearSem sem = standardize(sem_in);
  CovMatrix cov = implied_covariance(sem);
  int n = cov.size();
  double mx = 0.0;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      VSet rest = 0;
      for (int v = 0; v < n; ++v)
        if (v != x && v != y) rest = vset_add(rest, v);
      for (VSet w = 0;; w = (w - rest) & rest) {
        mx = std::max(mx, std::abs(partial_correlation(cov, x, y, w)));
        if (w == rest) break;
      }
    }
  return mx;
}

bool check_ubc(const LinearSem& sem, double C) {
  return max_partial_correlation(sem) <= C;
}

std::vector<Lemma2Record> lemma2_records(const LinearSem& sem_in, double J,
                                         double slack) {
  LinearSem sem = standardize(sem_in);
  const Dag& dag = sem.dag;
  int n = dag.num_vertices();
  if (n > 16) throw NumericalError("lemma2_records: too many vertices");
  CovMatrix cov = implied_covariance(sem);
  std::vector<Lemma2Record> out;
  double sj = std::sqrt(J);
  for (auto [i, j] : dag.edges()) {
    double b = sem.coef(i, j);
    VSet desc_j = dag.descendants(j);
    for (VSet a = 0; a < (VSet{1} << n); ++a) {
      if (!vset_contains(a, i) || !vset_contains(a, j)) continue;
      if (a & desc_j) continue;  // no proper descendant of Xj
      if (ancestral_closure(dag, a) != a) continue;
      VSet condset = vset_remove(vset_remove(a, i), j);
      double rho = partial_correlation(cov, i, j, condset);
      bool holds = std::abs(b) / sj + slack >= std::abs(rho) &&
                   std::abs(rho) + slack >= std::abs(b) * sj;
      out.push_back({i, j, a, rho, b, holds});
    }
  }
  return out;
}

bool verify_lemma2(const LinearSem& sem, double J, double slack) {
  for (const auto& rec : lemma2_records(sem, J, slack))
    if (!rec.holds) return false;
  return true;
}

Dag random_dag(int n_vars, double edge_prob, std::mt19937_64& rng,
               const std::vector<std::string>* names) {
  std::vector<std::string> vnames;
  if (names) {
    vnames = *names;
  } else {
    for (int i = 0; i < n_vars; ++i) vnames.push_back("X" + std::to_string(i));
  }
  std::vector<int> order(n_vars);
  for (int i = 0; i < n_vars; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n_vars; ++i)
    for (int j = i + 1; j < n_vars; ++j)
      if (unif(rng) < edge_prob) edges.emplace_back(order[i], order[j]);
  return Dag(std::move(vnames), edges);
}

LinearSem random_sem_unchecked(int n_vars, double edge_prob, double coef_min,
                               double coef_max, std::mt19937_64& rng) {
  Dag dag = random_dag(n_vars, edge_prob, rng);
  std::uniform_real_distribution<double> mag(coef_min, coef_max);
  std::uniform_int_distribution<int> sign(0, 1);
  LinearSem sem{dag, {}, std::vector<double>(n_vars, 1.0)};
  for (auto [p, c] : dag.edges())
    sem.coefficients[{p, c}] = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  return standardize(sem);
}

RandomSemResult random_sem(const RandomSemConfig& config) {
  config.params.validate();
  if (!(config.edge_prob >= 0 && config.edge_prob <= 1))
    throw NumericalError("edge_prob must be in [0,1]");
  if (!(config.coef_min >= 0 && config.coef_max >= config.coef_min))
    throw NumericalError("invalid coefficient range");
  std::mt19937_64 rng(config.seed);
  for (int attempt = 1; attempt <= config.max_attempts_per_model; ++attempt) {
    LinearSem sem = random_sem_unchecked(config.n_vars, config.edge_prob,
                                         config.coef_min, config.coef_max, rng);
    if (!check_k_triangle_faithfulness(sem, config.params.k).empty()) continue;
    if (!check_nvv(sem, config.params.J)) continue;
    if (!check_ubc(sem, config.params.C)) continue;
    return {std::move(sem), attempt};
  }
  double rate = 0.0;  // none accepted in the budget
  throw RejectionExhausted(
      "random_sem: rejection budget of " +
          std::to_string(config.max_attempts_per_model) +
          " draws exhausted (acceptance rate 0 in this window)",
      rate);
}

int Dataset::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw GraphError("unknown variable: " + name);
}

void Dataset::validate() const {
  if (data.rows() < 1) throw NumericalError("dataset needs at least one row");
  if (data.cols() != num_vars())
    throw NumericalError("dataset column count mismatch");
  if (!data.allFinite()) throw NumericalError("dataset has non-finite values");
}

Dataset sample(const LinearSem& sem, long n, std::uint64_t seed) {
  sem.validate();
  if (n < 1) throw NumericalError("sample size must be >= 1");
  int p = sem.dag.num_vertices();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.names = sem.dag.names();
  d.data.resize(n, p);
  const auto& topo = sem.dag.topological_order();
  std::vector<double> sd(p);
  for (int v = 0; v < p; ++v) sd[v] = std::sqrt(sem.error_variances[v]);
  for (long r = 0; r < n; ++r) {
    for (int v : topo) {
      double x = sd[v] * gauss(rng);
      for (int par : vset_to_vector(sem.dag.parents(v)))
        x += sem.coef(par, v) * d.data(r, par);
      d.data(r, v) = x;
    }
  }
  return d;
}

std::vector<double> regression_coefficients(
    const CovMatrix& cov, int target, const std::vector<int>& predictors) {
  int m = static_cast<int>(predictors.size());
  Eigen::MatrixXd vp(m, m);
  Eigen::VectorXd ct(m);
  for (int i = 0; i < m; ++i) {
    ct(i) = cov.m(target, predictors[i]);
    for (int j = 0; j < m; ++j) vp(i, j) = cov.m(predictors[i], predictors[j]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(vp);
  if (!lu.isInvertible())
    throw NumericalError("singular predictor covariance in regression on " +
                         cov.names.at(target));
  Eigen::VectorXd beta = lu.solve(ct);
  return std::vector<double>(beta.data(), beta.data() + m);
}

LinearSem path_cancellation_sem(double b_wx, double b_zw, double b_yx) {
  if (!(std::abs(b_wx) < 1 && std::abs(b_zw) < 1))
    throw NumericalError("path_cancellation_sem needs |b_wx|, |b_zw| < 1");
  if (b_yx == 0) throw NumericalError("b_yx must be nonzero");
  Dag dag = Dag::from_named_edges(
      {"X", "Y", "Z", "W"},
      {{"X", "Y"}, {"Z", "Y"}, {"X", "W"}, {"W", "Z"}});
  int X = dag.index_of("X"), Y = dag.index_of("Y"), Z = dag.index_of("Z"),
      W = dag.index_of("W");
  // Unit variances for X, W, Z; then rho(X,Z|Y) = 0 reduces to
  // c * sigma_y^2 = b_yx * b_yz * (var(Z) - c^2) with c = cov(X,Z).
  double var_w_err = 1 - b_wx * b_wx;
  double var_z_err = 1 - b_zw * b_zw;
  double c = b_zw * b_wx;
  double sigma_y2 = 0.5;
  double b_yz = c * sigma_y2 / (b_yx * (1.0 - c * c));
  LinearSem sem{dag, {}, std::vector<double>(4, 1.0)};
  sem.coefficients[{X, W}] = b_wx;
  sem.coefficients[{W, Z}] = b_zw;
  sem.coefficients[{X, Y}] = b_yx;
  sem.coefficients[{Z, Y}] = b_yz;
  sem.error_variances[W] = var_w_err;
  sem.error_variances[Z] = var_z_err;
  sem.error_variances[Y] = sigma_y2;
  return standardize(sem);
}

// --- serialization ---

nlohmann::json sem_to_json(const LinearSem& sem) {
  nlohmann::json j;
  j["vertices"] = sem.dag.names();
  auto edges = nlohmann::json::array();
  for (auto [p, c] : sem.dag.edges())
    edges.push_back({{"from", sem.dag.name(p)},
                     {"to", sem.dag.name(c)},
                     {"coef", sem.coef(p, c)}});
  j["edges"] = edges;
  nlohmann::json ev = nlohmann::json::object();
  for (int v = 0; v < sem.dag.num_vertices(); ++v)
    ev[sem.dag.name(v)] = sem.error_variances[v];
  j["error_variances"] = ev;
  return j;
}

LinearSem sem_from_json(const nlohmann::json& j) {
  std::vector<std::string> names = j.at("vertices");
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j.at("edges"))
    edges.emplace_back(e.at("from").get<std::string>(),
                       e.at("to").get<std::string>());
  Dag dag = Dag::from_named_edges(names, edges);
  LinearSem sem{dag, {}, std::vector<double>(names.size(), 1.0)};
  for (const auto& e : j.at("edges"))
    sem.coefficients[{dag.index_of(e.at("from")), dag.index_of(e.at("to"))}] =
        e.at("coef").get<double>();
  for (int v = 0; v < dag.num_vertices(); ++v)
    sem.error_variances[v] = j.at("error_variances").at(dag.name(v));
  sem.validate();
  return sem;
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream os;
  for (size_t i = 0; i < d.names.size(); ++i)
    os << (i ? "," : "") << d.names[i];
  os << "\n";
  char buf[64];
  for (long r = 0; r < d.n(); ++r) {
    for (int c = 0; c < d.num_vars(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", d.data(r, c));
      os << (c ? "," : "") << buf;
    }
    os << "\n";
  }
  return os.str();
}

Dataset dataset_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw NumericalError("empty CSV: missing header");
  Dataset d;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) d.names.push_back(cell);
  }
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != d.num_vars())
      throw NumericalError("CSV row has wrong number of columns");
    ++rows;
  }
  d.data.resize(rows, d.num_vars());
  for (long r = 0; r < rows; ++r)
    for (int c = 0; c < d.num_vars(); ++c)
      d.data(r, c) = values[r * d.num_vars() + c];
  d.validate();
  return d;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NumericalError("cannot open dataset file: " + path);
  return dataset_from_csv(in);
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write dataset file: " + path);
  out << dataset_to_csv(d);
}

}  // namespace causal
