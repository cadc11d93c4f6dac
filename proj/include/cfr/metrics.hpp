#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace cfr {

// RMSE values collected for one test environment (one r_test).
struct EnvResult {
  double r_test = 0.0;
  std::vector<double> rmse_values;  // one per repetition
};

// Table-row aggregate for one method in one scenario configuration.
struct StabilityReport {
  std::vector<std::pair<double, double>> per_env;  // (r_test, mean RMSE), sorted
  double ae = 0.0;
  double se = 0.0;
  double beta_v_error_mean = 0.0;
  double beta_v_error_var = 0.0;
  double beta_error_mean = 0.0;
};

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

// Mean absolute coefficient error over the given index subset.
double beta_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                  const std::vector<int>& index_subset);

// Reduces each environment to its mean RMSE, then returns
// (mean across environments, sample standard deviation across environments).
std::pair<double, double> ae_se(const std::vector<EnvResult>& env_results);

double accuracy(const std::vector<int>& pred_labels, const std::vector<int>& true_labels);

}  // namespace cfr
