#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "causal/estimate.hpp"
#include "causal/search.hpp"
#include "causal/sem.hpp"

namespace causal {

struct ExperimentConfig {
  RandomSemConfig model;  // n_vars, edge_prob, coef range, class params
  std::vector<long> sample_sizes = {500, 5000, 50000};
  int replications = 200;
  TestConfig test;  // alpha, margin_L
  V5Variant v5_variant = V5Variant::All;
  std::uint64_t master_seed = 0;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

struct ReplicationRecord {
  int replication = 0;
  long n = 0;
  ErrorKind error = ErrorKind::None;
  double distance = 0.0;
  bool v5_confirmed = false;
  int ambiguous_triples = 0;
  double unknown_fraction = 0.0;  // of ordered pairs
  int model_attempts = 0;         // rejection draws for this replication
};

struct SampleSizeSummary {
  long n = 0;
  double kind_I_rate = 0, kind_II_rate = 0, kind_III_rate = 0;
  double any_error_rate = 0;
  double mean_distance = 0, p90_distance = 0;
  double unknown_rate = 0;
  double v5_confirm_rate = 0;
  double ci_low = 0, ci_high = 1;  // Wilson 95% on any_error_rate
};

struct ExperimentReport {
  std::vector<SampleSizeSummary> summaries;  // one per sample size, ascending
  std::vector<ReplicationRecord> records;    // replication-major order
};

/// Stream seed for one (replication, stage, n) cell, mixed from the
/// master seed so that adding sample sizes or stages leaves the other
/// cells' randomness untouched.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                          std::uint64_t stage, std::uint64_t n);

/// Monte Carlo run: per replication draw a model from the class, sample
/// at each size, search, estimate, and grade against the truth.
/// Deterministic given the config. Throws RejectionExhausted if model
/// generation runs out of attempts.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// One row per sample size, fixed column order.
std::string report_to_csv(const ExperimentReport& report);

/// One JSON object per replication record, one per line.
std::string records_to_jsonl(const ExperimentReport& report);

}  // namespace causal
