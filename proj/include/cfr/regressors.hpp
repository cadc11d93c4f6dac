#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cfr/datagen.hpp"
#include "cfr/optim.hpp"
#include "cfr/rectifier.hpp"
#include "cfr/rng.hpp"

namespace cfr {

enum class Method { kOls, kRidge, kLasso, kDwr, kCfr };

// Output label; the reweighting baseline is an approximation and is labeled
// "dwr-like" everywhere it is reported.
std::string to_string(Method m);
Method method_from_string(const std::string& s);

// Which loss drives the W update: the reconstruction loss alone, or
// reconstruction plus the regression loss differentiated through W.
enum class WUpdateLoss { kReconstructionOnly, kJoint };

// When mini-batching, whether W and beta steps alternate within each batch
// or W sweeps all batches before beta does.
enum class Alternation { kPerBatch, kPerEpoch };

struct TrainConfig {
  double lr_w = 0.005;
  double lr_beta = 0.001;
  int epochs = 100;
  int batch_size = 0;  // 0 => full batch
  std::uint64_t seed = 47;
  WUpdateLoss w_update_loss = WUpdateLoss::kReconstructionOnly;
  double convergence_tol = 1e-8;  // relative change in both losses
  GradForm grad_form = GradForm::kSum;
  InitScheme init = InitScheme::kZeros;
  ReconNorm recon_norm = ReconNorm::kSquaredL2;
  Alternation alternation = Alternation::kPerBatch;
  bool fit_intercept = false;

  void validate() const;  // throws ConfigError
};

struct EpochLosses {
  double l_r;    // reconstruction loss, full data
  double l_cfr;  // regression loss, full data
};

struct CfrModel {
  Eigen::VectorXd beta;
  RectifierWeights weights;
  double intercept = 0.0;
  std::vector<EpochLosses> history;
  TrainConfig config;
};

struct LinearModel {
  Eigen::VectorXd beta;
  Method method = Method::kOls;
  double regularization = 0.0;
  bool converged = true;  // lasso coordinate descent convergence flag
};

// Prediction of the rectified regressor: (X*W)*beta + X*beta (+ intercept),
// i.e. X*(I+W)*beta with one shared coefficient vector.
Eigen::VectorXd cfr_predict(const Eigen::MatrixXd& X, const RectifierWeights& W,
                            const Eigen::VectorXd& beta, double intercept = 0.0);

// Sum of squared residuals of cfr_predict.
double cfr_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                const RectifierWeights& W, const Eigen::VectorXd& beta,
                double intercept = 0.0);

// dL/dbeta = -2*(X(I+W))^T * (Y - X(I+W)beta).
Eigen::VectorXd cfr_grad_beta(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                              const RectifierWeights& W, const Eigen::VectorXd& beta,
                              double intercept = 0.0);

// dL/dW = -2*X^T*(Y - X(I+W)beta)*beta^T with the diagonal zeroed; the
// regression loss differentiated through the rectified term.
Eigen::MatrixXd cfr_grad_w_regression(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                      const RectifierWeights& W,
                                      const Eigen::VectorXd& beta,
                                      double intercept = 0.0);

// Alternating SGD: per batch one W step (reconstruction loss by default),
// then one beta step on the regression loss; stops after cfg.epochs or when
// both full-data losses' relative change falls below cfg.convergence_tol.
CfrModel train_cfr(const Dataset& ds, const TrainConfig& cfg, Rng& rng);
CfrModel train_cfr(const Dataset& ds, const TrainConfig& cfg);  // seeds from cfg.seed

// Least squares via column-pivoted QR; rank-deficient X is an error.
LinearModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y);

// Solves (X^T X + lambda I) beta = X^T Y.
LinearModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda);

// Coordinate descent on ||Y - X beta||^2 + lambda*||beta||_1. Sets
// converged = false when max_iter sweeps do not reach tol.
LinearModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                      int max_iter = 10000, double tol = 1e-10);

struct DwrConfig {
  double lr = 0.05;  // scaled internally by n
  int iters = 100;
  std::uint64_t seed = 47;
};

// Sample-reweighting baseline ("dwr-like"): gradient descent on the sum of
// squared weighted covariances between all feature pairs, weights kept
// nonnegative with mean one, followed by weighted least squares.
std::pair<LinearModel, Eigen::VectorXd> dwr_fit(const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& Y,
                                                const DwrConfig& cfg = {});

// Sum of squared off-diagonal weighted covariances; the dwr objective.
double weighted_decorrelation_objective(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& weights);

}  // namespace cfr
