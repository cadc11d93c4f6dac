#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "cfr/classifier.hpp"
#include "cfr/regressors.hpp"

namespace cfr {

// A model loaded from disk; either flavor, distinguished by is_classifier.
struct SavedModel {
  bool is_classifier = false;

  // regression flavor
  std::string method;
  int p = 0;
  Eigen::VectorXd beta;
  std::optional<RectifierWeights> w;
  std::optional<double> intercept;
  std::vector<EpochLosses> history;
  nlohmann::json train_config;

  // classifier flavor
  int C = 0;
  Eigen::MatrixXd z_weights;
  Eigen::VectorXd class_bias;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;  // regression flavor
};

// Regression model file: {method, p, beta[], w[][] or null, intercept or
// null, train_config{}, history[]} with history entries [l_r, l_cfr].
void save_regression_model(const std::string& path, const std::string& method,
                           const Eigen::VectorXd& beta,
                           const std::optional<RectifierWeights>& w,
                           std::optional<double> intercept,
                           const nlohmann::json& train_config,
                           const std::vector<EpochLosses>& history);

// Classifier model file: {p, C, z_weights[][], class_bias[], w[][],
// train_config{}}.
void save_classifier_model(const std::string& path, const CfrClassifier& clf,
                           const nlohmann::json& train_config);

SavedModel load_model(const std::string& path);

}  // namespace cfr
