#include "causal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "causal/stats.hpp"

namespace causal {

void ExperimentConfig::validate() const {
  model.params.validate();
  test.validate();
  if (model.n_vars < 1 || model.n_vars > kMaxSearchVars)
    throw std::invalid_argument("n_vars must be in [1, " +
                                std::to_string(kMaxSearchVars) + "]");
  if (!(model.edge_prob >= 0 && model.edge_prob <= 1))
    throw std::invalid_argument("edge_prob must be in [0,1]");
  if (!(model.coef_min > 0 && model.coef_max >= model.coef_min))
    throw std::invalid_argument("coefficient range must satisfy 0 < min <= max");
  if (model.max_attempts_per_model < 1)
    throw std::invalid_argument("max_attempts_per_model must be >= 1");
  if (replications < 1)
    throw std::invalid_argument("replications must be >= 1");
  if (sample_sizes.empty())
    throw std::invalid_argument("at least one sample size is required");
  for (size_t i = 0; i < sample_sizes.size(); ++i) {
    if (sample_sizes[i] < 1)
      throw std::invalid_argument("sample sizes must be positive");
    if (i > 0 && sample_sizes[i] <= sample_sizes[i - 1])
      throw std::invalid_argument("sample sizes must be strictly increasing");
  }
}

namespace {

const char* v5_name(V5Variant v) {
  switch (v) {
    case V5Variant::Off: return "off";
    case V5Variant::All: return "all";
    case V5Variant::Some: return "some";
  }
  return "all";
}

V5Variant v5_from_name(const std::string& s) {
  if (s == "off") return V5Variant::Off;
  if (s == "all") return V5Variant::All;
  if (s == "some") return V5Variant::Some;
  throw std::invalid_argument("v5_variant must be one of off/all/some");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "n_vars",       "edge_prob",    "coef_min",
      "coef_max",     "k",            "J",
      "C",            "max_attempts_per_model",
      "alpha",        "margin_L",     "zero_tol",
      "sample_sizes", "replications", "v5_variant",
      "master_seed"};
  if (!j.is_object())
    throw std::invalid_argument("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw std::invalid_argument("unknown experiment config key: " + key);
  ExperimentConfig c;
  c.model.n_vars = j.value("n_vars", c.model.n_vars);
  c.model.edge_prob = j.value("edge_prob", c.model.edge_prob);
  c.model.coef_min = j.value("coef_min", c.model.coef_min);
  c.model.coef_max = j.value("coef_max", c.model.coef_max);
  c.model.params.k = j.value("k", c.model.params.k);
  c.model.params.J = j.value("J", c.model.params.J);
  c.model.params.C = j.value("C", c.model.params.C);
  c.model.max_attempts_per_model =
      j.value("max_attempts_per_model", c.model.max_attempts_per_model);
  c.test.alpha = j.value("alpha", c.test.alpha);
  c.test.margin_L = j.value("margin_L", c.test.margin_L);
  c.test.zero_tol = j.value("zero_tol", c.test.zero_tol);
  if (j.contains("sample_sizes"))
    c.sample_sizes = j.at("sample_sizes").get<std::vector<long>>();
  c.replications = j.value("replications", c.replications);
  if (j.contains("v5_variant"))
    c.v5_variant = v5_from_name(j.at("v5_variant").get<std::string>());
  c.master_seed = j.value("master_seed", c.master_seed);
  c.validate();
  return c;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["n_vars"] = c.model.n_vars;
  j["edge_prob"] = c.model.edge_prob;
  j["coef_min"] = c.model.coef_min;
  j["coef_max"] = c.model.coef_max;
  j["k"] = c.model.params.k;
  j["J"] = c.model.params.J;
  j["C"] = c.model.params.C;
  j["max_attempts_per_model"] = c.model.max_attempts_per_model;
  j["alpha"] = c.test.alpha;
  j["margin_L"] = c.test.margin_L;
  j["zero_tol"] = c.test.zero_tol;
  j["sample_sizes"] = c.sample_sizes;
  j["replications"] = c.replications;
  j["v5_variant"] = v5_name(c.v5_variant);
  j["master_seed"] = c.master_seed;
  return j;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                          std::uint64_t stage, std::uint64_t n) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(mix(master) ^ replication) ^ stage) ^ n);
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  int p = config.model.n_vars;
  double ordered_pairs = static_cast<double>(p) * (p - 1);
  for (int rep = 0; rep < config.replications; ++rep) {
    RandomSemConfig rc = config.model;
    rc.seed = derive_seed(config.master_seed, rep, 1, 0);
    RandomSemResult model = random_sem(rc);
    for (long n : config.sample_sizes) {
      Dataset data =
          sample(model.sem, n, derive_seed(config.master_seed, rep, 2, n));
      CovMatrix cov = sample_covariance(data);
      CiDecider decider(cov, n, config.test);
      SearchResult search = vcsgs(decider, config.v5_variant);
      EdgeEstimates est = estimate_from_search(search, cov);
      ReplicationRecord rec;
      rec.replication = rep;
      rec.n = n;
      rec.error = classify_error(search.graph, model.sem.dag);
      rec.distance = structural_distance(est, model.sem);
      rec.v5_confirmed = search.nonadjacency_confirmed;
      rec.ambiguous_triples =
          static_cast<int>(search.graph.ambiguous_triples().size());
      long unknown = std::count_if(
          est.pairs.begin(), est.pairs.end(), [](const auto& kv) {
            return kv.second.kind == EstimateKind::Unknown;
          });
      rec.unknown_fraction =
          ordered_pairs > 0 ? unknown / ordered_pairs : 0.0;
      rec.model_attempts = model.attempts;
      report.records.push_back(rec);
    }
  }
  for (long n : config.sample_sizes) {
    SampleSizeSummary s;
    s.n = n;
    std::vector<double> distances;
    long errs = 0;
    long total = 0;
    for (const ReplicationRecord& rec : report.records) {
      if (rec.n != n) continue;
      ++total;
      s.kind_I_rate += rec.error == ErrorKind::KindI;
      s.kind_II_rate += rec.error == ErrorKind::KindII;
      s.kind_III_rate += rec.error == ErrorKind::KindIII;
      errs += rec.error != ErrorKind::None;
      s.mean_distance += rec.distance;
      distances.push_back(rec.distance);
      s.unknown_rate += rec.unknown_fraction;
      s.v5_confirm_rate += rec.v5_confirmed;
    }
    s.kind_I_rate /= total;
    s.kind_II_rate /= total;
    s.kind_III_rate /= total;
    s.any_error_rate = static_cast<double>(errs) / total;
    s.mean_distance /= total;
    s.unknown_rate /= total;
    s.v5_confirm_rate /= total;
    std::sort(distances.begin(), distances.end());
    size_t idx = static_cast<size_t>(
        std::ceil(0.9 * static_cast<double>(distances.size())));
    s.p90_distance = distances[std::min(distances.size() - 1,
                                        idx > 0 ? idx - 1 : 0)];
    std::tie(s.ci_low, s.ci_high) = wilson_interval(errs, total);
    report.summaries.push_back(s);
  }
  return report;
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out =
      "n,kind_I_rate,kind_II_rate,kind_III_rate,any_error_rate,"
      "mean_distance,p90_distance,unknown_rate,v5_confirm_rate,"
      "ci_low,ci_high\n";
  for (const SampleSizeSummary& s : report.summaries) {
    out += std::to_string(s.n) + "," + fmt(s.kind_I_rate) + "," +
           fmt(s.kind_II_rate) + "," + fmt(s.kind_III_rate) + "," +
           fmt(s.any_error_rate) + "," + fmt(s.mean_distance) + "," +
           fmt(s.p90_distance) + "," + fmt(s.unknown_rate) + "," +
           fmt(s.v5_confirm_rate) + "," + fmt(s.ci_low) + "," +
           fmt(s.ci_high) + "\n";
  }
  return out;
}

std::string records_to_jsonl(const ExperimentReport& report) {
  std::string out;
  for (const ReplicationRecord& rec : report.records) {
    nlohmann::json j;
    j["replication"] = rec.replication;
    j["n"] = rec.n;
    j["error"] = to_string(rec.error);
    j["distance"] = rec.distance;
    j["v5_confirmed"] = rec.v5_confirmed;
    j["ambiguous_triples"] = rec.ambiguous_triples;
    j["unknown_fraction"] = rec.unknown_fraction;
    j["model_attempts"] = rec.model_attempts;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace causal
