#include "cfr/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cfr/errors.hpp"

namespace cfr {

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw DataError("rmse: length mismatch");
  if (pred.size() == 0) throw DataError("rmse: empty input");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double beta_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                  const std::vector<int>& index_subset) {
  if (beta_hat.size() != beta_true.size()) throw DataError("beta_error: length mismatch");
  if (index_subset.empty()) throw DataError("beta_error: empty index subset");
  double sum = 0.0;
  for (int i : index_subset) {
    if (i < 0 || i >= beta_hat.size()) {
      throw DataError("beta_error: index " + std::to_string(i) + " out of range");
    }
    sum += std::abs(beta_hat[i] - beta_true[i]);
  }
  return sum / static_cast<double>(index_subset.size());
}

std::pair<double, double> ae_se(const std::vector<EnvResult>& env_results) {
  if (env_results.size() < 2) {
    throw DataError("ae_se: needs at least 2 environments, got " +
                    std::to_string(env_results.size()));
  }
  std::vector<double> env_means;
  env_means.reserve(env_results.size());
  for (const auto& env : env_results) {
    if (env.rmse_values.empty()) throw DataError("ae_se: environment with no RMSE values");
    double m = std::accumulate(env.rmse_values.begin(), env.rmse_values.end(), 0.0) /
               static_cast<double>(env.rmse_values.size());
    env_means.push_back(m);
  }
  const double e = static_cast<double>(env_means.size());
  double ae = std::accumulate(env_means.begin(), env_means.end(), 0.0) / e;
  // The deviation of identical means is identically zero; don't let the
  // rounding of the mean (e.g. three 0.7s averaged) manufacture a tiny SE.
  bool all_equal = true;
  for (double m : env_means) {
    if (m != env_means.front()) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) return {ae, 0.0};
  double ss = 0.0;
  for (double m : env_means) ss += (m - ae) * (m - ae);
  double se = std::sqrt(ss / (e - 1.0));
  return {ae, se};
}

double accuracy(const std::vector<int>& pred_labels, const std::vector<int>& true_labels) {
  if (pred_labels.size() != true_labels.size()) throw DataError("accuracy: length mismatch");
  if (pred_labels.empty()) throw DataError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred_labels.size(); ++i) {
    if (pred_labels[i] == true_labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred_labels.size());
}

}  // namespace cfr
