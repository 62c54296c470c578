#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causal/citest.hpp"
#include "causal/graph.hpp"
#include "causal/sem.hpp"

namespace causal {

/// Hard cap on the number of variables a search call accepts; the
/// conditioning-set enumeration is exhaustive and costs O(2^n) per pair.
inline constexpr int kMaxSearchVars = 12;

/// Conditional-independence decider backing the searches. Either an
/// exact population oracle or a Fisher z tester over a sample
/// covariance. Answers are cached per decider instance, so a fresh
/// decider should be built for each search call.
class CiDecider {
 public:
  enum class Mode { Population, Sample };

  explicit CiDecider(PopulationOracle oracle, TestConfig config = {});
  CiDecider(CovMatrix cov, long sample_n, TestConfig config = {});
  static CiDecider from_dataset(const Dataset& data, TestConfig config = {});

  Mode mode() const { return mode_; }
  const std::vector<std::string>& names() const { return cov_.names; }
  int num_vars() const { return cov_.size(); }
  const TestConfig& config() const { return config_; }
  const CovMatrix& covariance() const { return cov_; }
  long sample_n() const { return n_; }

  /// Tri-state independence judgment; nullopt means the question cannot
  /// be answered (sample too small or singular conditioning).
  std::optional<bool> independent(int x, int y, VSet w) const;

  /// Partial correlation estimate (exact in population mode). Throws
  /// NumericalError on a singular conditioning set.
  double pcorr(int x, int y, VSet w) const;

  /// Local Markov battery against this decider's facts.
  MarkovTestResult markov_test(const Dag& dag) const;

 private:
  Mode mode_;
  std::optional<PopulationOracle> oracle_;
  CovMatrix cov_;
  long n_ = 0;
  TestConfig config_;
  mutable std::map<std::tuple<int, int, VSet>, std::optional<bool>> indep_cache_;
};

struct SearchDiagnostics {
  std::map<Pair, VSet> separating_sets;  // the first screening set per pair
  std::vector<std::string> log;
  int patterns_tested = 0;  // valid disambiguation patterns reached in V5
  int patterns_passed = 0;  // of those, how many satisfied the Markov tests
};

enum class V5Variant { Off, All, Some };

struct SearchResult {
  ExtendedPattern graph;
  bool nonadjacency_confirmed = false;
  SearchDiagnostics diagnostics;
};

/// Plain SGS: S1-S4 with the strict S3 orientation step. Throws
/// GraphError when S3 reaches neither clause for some unshielded triple
/// (a faithfulness violation) or when orientation rules conflict.
Pattern sgs(const CiDecider& decider);

/// Conservative SGS: S3 is replaced by S3*, which marks undecidable
/// triples Ambiguous instead of failing. In sample mode S3* uses the
/// margin parameter L from the decider's TestConfig. Removed pairs are
/// marked ApparentlyNonadjacent. Never throws on conflicting evidence.
ExtendedPattern csgs(const CiDecider& decider,
                     SearchDiagnostics* diag = nullptr);

/// Very Conservative SGS: V1-V4 are csgs plus the V3(iii) definite
/// nonadjacency marks; V5 tests every consistent disambiguation of the
/// result against the Markov condition and, on success, upgrades all
/// apparent nonadjacencies to definite. V5Variant::Some is the
/// experimental variant requiring only one passing pattern;
/// V5Variant::Off skips V5 entirely.
SearchResult vcsgs(const CiDecider& decider,
                   V5Variant variant = V5Variant::All);

enum class ErrorKind { None, KindI, KindII, KindIII };

const char* to_string(ErrorKind kind);

/// Grades a search output against the generating DAG. Kind I: an
/// adjacency absent from the truth. Kind II: a marked noncollider that
/// is a collider in the truth. Kind III: a directed edge the truth does
/// not have. Checked in that order; missing edges are not errors.
ErrorKind classify_error(const ExtendedPattern& output, const Dag& truth);

/// All subsets of `rest`, smallest first, ties broken by value.
std::vector<VSet> subsets_by_size(VSet rest);

}  // namespace causal
