#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "causal/estimate.hpp"
#include "causal/harness.hpp"
#include "causal/search.hpp"

namespace {

using nlohmann::json;

constexpr int kExitBadInput = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitRejection = 3;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return json::parse(in);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << content;
}

causal::V5Variant parse_v5(const std::string& s) {
  if (s == "all") return causal::V5Variant::All;
  if (s == "some") return causal::V5Variant::Some;
  if (s == "off") return causal::V5Variant::Off;
  throw std::invalid_argument("--v5 must be all, some or off");
}

json search_result_json(const causal::SearchResult& result) {
  json diag;
  json seps = json::array();
  for (const auto& [pair, s] : result.diagnostics.separating_sets) {
    json entry;
    entry["x"] = result.graph.g.name(pair.a);
    entry["y"] = result.graph.g.name(pair.b);
    json members = json::array();
    for (int v : causal::vset_to_vector(s))
      members.push_back(result.graph.g.name(v));
    entry["set"] = members;
    seps.push_back(entry);
  }
  diag["separating_sets"] = seps;
  diag["log"] = result.diagnostics.log;
  diag["patterns_tested"] = result.diagnostics.patterns_tested;
  diag["patterns_passed"] = result.diagnostics.patterns_passed;
  json out;
  out["graph"] = causal::to_json(result.graph);
  out["nonadjacency_confirmed"] = result.nonadjacency_confirmed;
  out["diagnostics"] = diag;
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Causal structure discovery for linear Gaussian models"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Draw an i.i.d. sample from a model and write CSV");
  std::string sim_model, sim_output;
  long sim_n = 1000;
  std::uint64_t sim_seed = 0;
  simulate->add_option("--model", sim_model, "model JSON file")->required();
  simulate->add_option("--n", sim_n, "sample size");
  simulate->add_option("--seed", sim_seed, "RNG seed");
  simulate->add_option("--output", sim_output, "output CSV (default stdout)");

  // discover
  auto* discover = app.add_subcommand(
      "discover", "Run the conservative searches on data or an exact oracle");
  std::string dis_input, dis_oracle, dis_output, dis_v5 = "all";
  causal::TestConfig dis_config;
  discover->add_option("--input", dis_input, "dataset CSV");
  discover->add_option("--oracle", dis_oracle,
                       "model JSON; use exact population facts instead of data");
  discover->add_option("--alpha", dis_config.alpha, "test level");
  discover->add_option("--margin-L", dis_config.margin_L,
                       "orientation margin");
  discover->add_option("--zero-tol", dis_config.zero_tol,
                       "population independence threshold");
  discover->add_option("--v5", dis_v5, "V5 variant: all, some or off");
  discover->add_option("--output", dis_output, "output JSON (default stdout)");

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "Estimate structural coefficients from a dataset");
  std::string est_input, est_output;
  causal::TestConfig est_config;
  estimate->add_option("--input", est_input, "dataset CSV")->required();
  estimate->add_option("--alpha", est_config.alpha, "test level");
  estimate->add_option("--margin-L", est_config.margin_L,
                       "orientation margin");
  estimate->add_option("--output", est_output, "output JSON (default stdout)");

  // oracle
  auto* oracle = app.add_subcommand(
      "oracle", "Population-mode search output for a model");
  std::string orc_model, orc_output;
  double orc_zero_tol = 1e-9;
  oracle->add_option("--model", orc_model, "model JSON file")->required();
  oracle->add_option("--zero-tol", orc_zero_tol,
                     "population independence threshold");
  oracle->add_option("--output", orc_output, "output JSON (default stdout)");

  // experiment
  auto* experiment = app.add_subcommand(
      "experiment", "Monte Carlo run over random models from the class");
  std::string exp_config, exp_output, exp_log;
  experiment->add_option("--config", exp_config, "experiment config JSON")
      ->required();
  experiment->add_option("--output", exp_output,
                         "report CSV (default stdout)");
  experiment->add_option("--log", exp_log, "per-replication JSONL log");

  // validate-model
  auto* validate = app.add_subcommand(
      "validate-model", "Check a model against the class assumptions");
  std::string val_model;
  causal::ModelClassParams val_params;
  validate->add_option("--model", val_model, "model JSON file")->required();
  validate->add_option("--k", val_params.k, "triangle-faithfulness constant");
  validate->add_option("--J", val_params.J, "variance lower bound");
  validate->add_option("--C", val_params.C, "correlation upper bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitBadInput;
  }

  if (*simulate) {
    causal::LinearSem sem = causal::sem_from_json(load_json(sim_model));
    causal::Dataset data = causal::sample(sem, sim_n, sim_seed);
    write_output(sim_output, causal::dataset_to_csv(data));
    return 0;
  }

  if (*discover) {
    if (dis_input.empty() == dis_oracle.empty())
      throw std::invalid_argument(
          "discover needs exactly one of --input or --oracle");
    causal::V5Variant variant = parse_v5(dis_v5);
    causal::SearchResult result;
    if (!dis_oracle.empty()) {
      causal::LinearSem sem = causal::sem_from_json(load_json(dis_oracle));
      causal::CiDecider decider(
          causal::PopulationOracle(sem, dis_config.zero_tol), dis_config);
      result = causal::vcsgs(decider, variant);
    } else {
      causal::Dataset data = causal::load_dataset(dis_input);
      causal::CiDecider decider =
          causal::CiDecider::from_dataset(data, dis_config);
      result = causal::vcsgs(decider, variant);
    }
    write_output(dis_output, search_result_json(result).dump(2) + "\n");
    return 0;
  }

  if (*estimate) {
    causal::Dataset data = causal::load_dataset(est_input);
    causal::EdgeEstimates est = causal::edge_estimation(data, est_config);
    write_output(est_output, causal::estimates_to_json(est).dump(2) + "\n");
    return 0;
  }

  if (*oracle) {
    causal::LinearSem sem = causal::sem_from_json(load_json(orc_model));
    causal::CiDecider decider(causal::PopulationOracle(sem, orc_zero_tol));
    causal::SearchResult result = causal::vcsgs(decider);
    json out = search_result_json(result);
    out["true_pattern"] = causal::to_json(causal::pattern_of(sem.dag));
    write_output(orc_output, out.dump(2) + "\n");
    return 0;
  }

  if (*experiment) {
    causal::ExperimentConfig config =
        causal::experiment_config_from_json(load_json(exp_config));
    causal::ExperimentReport report = causal::run_experiment(config);
    write_output(exp_output, causal::report_to_csv(report));
    if (!exp_log.empty())
      write_output(exp_log, causal::records_to_jsonl(report));
    return 0;
  }

  if (*validate) {
    val_params.validate();
    causal::LinearSem sem = causal::sem_from_json(load_json(val_model));
    causal::LinearSem std_sem = causal::standardize(sem);
    auto violations =
        causal::check_k_triangle_faithfulness(std_sem, val_params.k);
    double min_var = causal::min_conditional_variance(std_sem);
    double max_rho = causal::max_partial_correlation(std_sem);
    bool nvv_ok = min_var >= val_params.J;
    bool ubc_ok = max_rho <= val_params.C;
    bool pass = violations.empty() && nvv_ok && ubc_ok;
    std::cout << (pass ? "pass" : "fail") << "\n";
    const auto& names = std_sem.dag.names();
    for (const auto& v : violations) {
      std::cout << "  triangle-faithfulness: triple <" << names[v.triple.a]
                << "," << names[v.triple.m] << "," << names[v.triple.b]
                << "> with W={";
      bool first = true;
      for (int w : causal::vset_to_vector(v.w)) {
        if (!first) std::cout << ",";
        std::cout << names[w];
        first = false;
      }
      std::cout << "}: |rho|=" << std::abs(v.rho)
                << " < k*|e|=" << val_params.k * std::abs(v.edge_coef)
                << "\n";
    }
    if (!nvv_ok)
      std::cout << "  variance bound: min conditional variance " << min_var
                << " < J=" << val_params.J << "\n";
    if (!ubc_ok)
      std::cout << "  correlation bound: max |rho| " << max_rho
                << " > C=" << val_params.C << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const causal::RejectionExhausted& e) {
    std::cerr << "error: " << e.what()
              << " (acceptance rate " << e.acceptance_rate << ")\n";
    return kExitRejection;
  } catch (const causal::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const causal::GraphError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
}
