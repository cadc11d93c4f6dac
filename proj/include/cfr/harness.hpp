#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfr/datagen.hpp"
#include "cfr/metrics.hpp"
#include "cfr/regressors.hpp"

namespace cfr {

// One method entry in a scenario: the tag plus whichever hyperparameters
// that method consumes.
struct MethodSpec {
  Method method = Method::kOls;
  double lambda = 0.1;  // ridge/lasso regularization strength
  TrainConfig train;    // cfr
  DwrConfig dwr;        // dwr-like

  std::string label() const { return to_string(method); }
};

std::vector<double> default_test_grid();  // +/-{1.3, 1.5, 1.7, 2.0, 2.5, 3.0}

// One experimental configuration: a training environment, the methods to
// fit, and the evaluation protocol (test bias grid and repetition counts).
struct Scenario {
  std::string name;
  EnvironmentSpec train_spec;
  std::vector<MethodSpec> methods;
  std::vector<double> test_grid = default_test_grid();
  int train_reps = 50;
  int test_reps_per_env = 50;
  std::uint64_t base_seed = 47;

  void validate() const;  // throws ConfigError
};

// One row of the results table: a training-only row (r_test and rmse empty)
// or one evaluation cell, which carries the mean RMSE over the test
// repetitions for that (rep, r_test).
struct RunRecord {
  std::string scenario;
  std::string method;
  int n = 0;
  int p = 0;
  std::optional<double> r_train;
  std::optional<double> r_test;
  int rep = 0;
  std::uint64_t seed = 0;  // training-data seed of this rep
  std::optional<double> rmse;
  double beta_error = 0.0;
  double beta_v_error = 0.0;
};

// A trained method ready for evaluation.
struct FittedModel {
  std::string label;
  Eigen::VectorXd beta;
  std::optional<CfrModel> cfr;  // engaged when the method is cfr

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// Seed derivation: all run seeds are mixed from the base seed and the
// *content* of the training spec (n, p, outcome form, bias, noise), never
// from the scenario name, so identical configurations produce identical
// numbers wherever they appear.
std::uint64_t spec_content_key(const EnvironmentSpec& spec);
std::uint64_t train_data_seed(std::uint64_t base_seed, const EnvironmentSpec& spec, int rep);

// Fits one method on a dataset; train_seed feeds the method's own random
// stream (batch shuffling, symmetry-breaking init).
FittedModel fit_method(const Dataset& ds, const MethodSpec& m, std::uint64_t train_seed);

struct SingleResult {
  FittedModel model;
  double beta_error = 0.0;
  double beta_v_error = 0.0;
};

// Generates one training dataset from (train_spec, seed), fits the method,
// and scores the coefficients against the generator's ground truth.
SingleResult run_single(const EnvironmentSpec& train_spec, const MethodSpec& m,
                        std::uint64_t seed);

// Evaluates a trained model over the test grid; per (r_test, repetition) a
// fresh environment is generated with a seed mixed from (base_seed, r_test,
// repetition) — grid order does not matter.
std::vector<EnvResult> evaluate_across_envs(const FittedModel& model,
                                            const std::vector<double>& test_grid,
                                            const EnvironmentSpec& spec_template,
                                            int reps, std::uint64_t base_seed);

struct ScenarioResult {
  Scenario scenario;
  std::vector<RunRecord> records;                    // canonical sort order
  std::map<std::string, StabilityReport> by_method;  // method label -> aggregate
};

ScenarioResult run_scenario(const Scenario& s, int threads = 1);

// Sorts records by (scenario, method, rep, r_test), training rows first.
void sort_records(std::vector<RunRecord>& records);

// Recomputes every aggregate from the record table alone; run_scenario's
// by_method is exactly this projection of its own records.
std::map<std::string, std::map<std::string, StabilityReport>> aggregate_records(
    const std::vector<RunRecord>& records);

// The three reference sweeps: sample-size sweep (s1: n in {1000, 2000, 4000},
// p = 10, r = 1.7), dimension sweep (s2: p in {10, 20, 40}, n = 2000,
// r = 1.7), bias sweep (s3: r in {1.5, 1.7, 2.0}, n = 2000, p = 20); five
// methods each. group is "s1", "s2", "s3", or "all".
std::vector<Scenario> table1_scenarios(const std::string& group, int train_reps = 50,
                                       int test_reps_per_env = 50,
                                       std::uint64_t base_seed = 47);

// The rectified-regressor training configuration used by the reference
// sweeps (and frozen by the acceptance suite).
TrainConfig table1_cfr_train_config();

// Default regularization strength the reference sweeps hand to ridge/lasso;
// scaled with n because their penalized objectives sum over samples.
double table1_lambda(int n);

// Results CSV: header scenario,method,n,p,r_train,r_test,rep,seed,rmse,
// beta_error,beta_v_error; optional fields empty.
extern const char* kCsvHeader;
std::string records_to_csv(const std::vector<RunRecord>& records);
void write_records_csv(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> read_records_csv(const std::string& path);

// Runs fn(0..jobs-1), optionally across threads; any exception aborts the
// batch and is rethrown (lowest failing job wins, deterministically).
void parallel_for(int jobs, int threads, const std::function<void(int)>& fn);

}  // namespace cfr
