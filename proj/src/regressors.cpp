#include "cfr/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfr/errors.hpp"
#include "cfr/numio.hpp"

namespace cfr {

std::string to_string(Method m) {
  switch (m) {
    case Method::kOls: return "ols";
    case Method::kRidge: return "ridge";
    case Method::kLasso: return "lasso";
    case Method::kDwr: return "dwr-like";
    case Method::kCfr: return "cfr";
  }
  throw ConfigError("unknown method");
}

Method method_from_string(const std::string& s) {
  if (s == "ols") return Method::kOls;
  if (s == "ridge") return Method::kRidge;
  if (s == "lasso") return Method::kLasso;
  if (s == "dwr" || s == "dwr-like") return Method::kDwr;
  if (s == "cfr") return Method::kCfr;
  throw ConfigError("unknown method '" + s +
                    "'; valid: ols, ridge, lasso, dwr-like, cfr");
}

void TrainConfig::validate() const {
  if (lr_w < 0 || lr_beta < 0) {
    throw ConfigError("learning rates must be >= 0 (0 disables the step)");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0 (0 = full batch)");
  if (convergence_tol < 0) throw ConfigError("convergence_tol must be >= 0");
}

namespace {

void check_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  if (X.rows() != Y.size()) {
    throw DataError("X has " + std::to_string(X.rows()) + " rows but Y has " +
                    std::to_string(Y.size()));
  }
}

Eigen::VectorXd residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                         const RectifierWeights& W, const Eigen::VectorXd& beta,
                         double intercept) {
  return Y - cfr_predict(X, W, beta, intercept);
}

}  // namespace

Eigen::VectorXd cfr_predict(const Eigen::MatrixXd& X, const RectifierWeights& W,
                            const Eigen::VectorXd& beta, double intercept) {
  if (X.cols() != beta.size()) {
    throw DataError("cfr_predict: X has " + std::to_string(X.cols()) +
                    " columns but beta has " + std::to_string(beta.size()));
  }
  // Written as the explicit two-term sum so that W = 0 reproduces the plain
  // linear prediction X*beta exactly, bit for bit.
  Eigen::VectorXd pred = rectify(X, W) * beta + X * beta;
  if (intercept != 0.0) pred.array() += intercept;
  return pred;
}

double cfr_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                const RectifierWeights& W, const Eigen::VectorXd& beta,
                double intercept) {
  check_xy(X, Y);
  return residual(X, Y, W, beta, intercept).squaredNorm();
}

Eigen::VectorXd cfr_grad_beta(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                              const RectifierWeights& W, const Eigen::VectorXd& beta,
                              double intercept) {
  check_xy(X, Y);
  Eigen::MatrixXd M = X + rectify(X, W);  // X*(I+W)
  return -2.0 * (M.transpose() * (Y - M * beta -
                                  Eigen::VectorXd::Constant(Y.size(), intercept)));
}

Eigen::MatrixXd cfr_grad_w_regression(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                      const RectifierWeights& W,
                                      const Eigen::VectorXd& beta, double intercept) {
  check_xy(X, Y);
  Eigen::VectorXd r = residual(X, Y, W, beta, intercept);
  Eigen::MatrixXd grad = -2.0 * (X.transpose() * r) * beta.transpose();
  grad.diagonal().setZero();
  return grad;
}

CfrModel train_cfr(const Dataset& ds, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (ds.n() < 1) throw DataError("train_cfr: empty dataset");
  const Eigen::MatrixXd& X = ds.X;
  const Eigen::VectorXd& Y = ds.Y;
  const int n = ds.n(), p = ds.p();

  CfrModel model;
  model.config = cfg;
  model.weights = init_weights(p, cfg.init, rng);
  model.beta = Eigen::VectorXd::Zero(p);
  model.intercept = 0.0;

  const double denom_full = cfg.grad_form == GradForm::kMean ? double(n) : 1.0;
  double prev_lr = std::numeric_limits<double>::infinity();
  double prev_lcfr = std::numeric_limits<double>::infinity();

  auto w_step = [&](const Eigen::MatrixXd& Xb, const Eigen::VectorXd& Yb) {
    if (cfg.lr_w <= 0) return;
    Eigen::MatrixXd g = reconstruction_grad(Xb, model.weights, cfg.recon_norm);
    if (cfg.w_update_loss == WUpdateLoss::kJoint) {
      g += cfr_grad_w_regression(Xb, Yb, model.weights, model.beta, model.intercept);
    }
    if (cfg.grad_form == GradForm::kMean) g /= double(Xb.rows());
    model.weights = sgd_step_w(model.weights, g, cfg.lr_w);
  };
  auto beta_step = [&](const Eigen::MatrixXd& Xb, const Eigen::VectorXd& Yb) {
    if (cfg.lr_beta <= 0) return;
    Eigen::VectorXd g = cfr_grad_beta(Xb, Yb, model.weights, model.beta, model.intercept);
    double scale = cfg.grad_form == GradForm::kMean ? 1.0 / double(Xb.rows()) : 1.0;
    if (!g.allFinite()) {
      throw DivergenceError("non-finite beta gradient (lr_w=" +
                            numio::format_double(cfg.lr_w) + ", lr_beta=" +
                            numio::format_double(cfg.lr_beta) + ")");
    }
    model.beta -= (cfg.lr_beta * scale) * g;
    if (cfg.fit_intercept) {
      Eigen::VectorXd r = residual(Xb, Yb, model.weights, model.beta, model.intercept);
      model.intercept -= cfg.lr_beta * scale * (-2.0 * r.sum());
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto batches = make_batches(n, cfg.batch_size, rng);
    auto gather = [&](const std::vector<int>& idx, Eigen::MatrixXd& Xb,
                      Eigen::VectorXd& Yb) {
      Xb.resize(static_cast<long>(idx.size()), p);
      Yb.resize(static_cast<long>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        Xb.row(static_cast<long>(i)) = X.row(idx[i]);
        Yb[static_cast<long>(i)] = Y[idx[i]];
      }
    };
    Eigen::MatrixXd Xb;
    Eigen::VectorXd Yb;
    if (cfg.alternation == Alternation::kPerBatch) {
      for (const auto& idx : batches) {
        gather(idx, Xb, Yb);
        w_step(Xb, Yb);
        beta_step(Xb, Yb);
      }
    } else {
      for (const auto& idx : batches) {
        gather(idx, Xb, Yb);
        w_step(Xb, Yb);
      }
      for (const auto& idx : batches) {
        gather(idx, Xb, Yb);
        beta_step(Xb, Yb);
      }
    }

    double l_r = reconstruction_loss(X, model.weights, cfg.recon_norm) / denom_full;
    double l_cfr = cfr_loss(X, Y, model.weights, model.beta, model.intercept) / denom_full;
    if (!std::isfinite(l_r) || !std::isfinite(l_cfr)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                            " (lr_w=" + numio::format_double(cfg.lr_w) + ", lr_beta=" +
                            numio::format_double(cfg.lr_beta) + ")");
    }
    model.history.push_back({l_r, l_cfr});

    auto rel = [](double cur, double prev) {
      if (!std::isfinite(prev)) return std::numeric_limits<double>::infinity();
      return std::abs(cur - prev) / std::max(std::abs(prev), 1e-300);
    };
    if (rel(l_r, prev_lr) < cfg.convergence_tol &&
        rel(l_cfr, prev_lcfr) < cfg.convergence_tol) {
      break;
    }
    prev_lr = l_r;
    prev_lcfr = l_cfr;
  }
  return model;
}

CfrModel train_cfr(const Dataset& ds, const TrainConfig& cfg) {
  Rng rng(cfg.seed);
  return train_cfr(ds, cfg, rng);
}

LinearModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  check_xy(X, Y);
  if (X.rows() < X.cols()) {
    throw DataError("ols_fit: fewer rows than columns (" + std::to_string(X.rows()) +
                    " x " + std::to_string(X.cols()) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    throw DataError("ols_fit: design matrix is rank-deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(X.cols()) + ")");
  }
  LinearModel m;
  m.method = Method::kOls;
  m.beta = qr.solve(Y);
  return m;
}

LinearModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda) {
  check_xy(X, Y);
  if (lambda < 0) throw ConfigError("ridge lambda must be >= 0");
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd A = X.transpose() * X + lambda * Eigen::MatrixXd::Identity(p, p);
  LinearModel m;
  m.method = Method::kRidge;
  m.regularization = lambda;
  m.beta = A.ldlt().solve(X.transpose() * Y);
  return m;
}

LinearModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                      int max_iter, double tol) {
  check_xy(X, Y);
  if (lambda < 0) throw ConfigError("lasso lambda must be >= 0");
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd col_sq(p);
  for (int j = 0; j < p; ++j) col_sq[j] = X.col(j).squaredNorm();
  Eigen::VectorXd r = Y;  // residual Y - X*beta, maintained incrementally

  LinearModel m;
  m.method = Method::kLasso;
  m.regularization = lambda;
  m.converged = false;
  for (int it = 0; it < max_iter; ++it) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) continue;
      double rho = X.col(j).dot(r) + col_sq[j] * beta[j];
      // Minimizer of ||r_j - X_j b||^2 + lambda*|b| is the soft threshold
      // S(rho, lambda/2) / ||X_j||^2.
      double thr = lambda / 2.0;
      double b_new = 0.0;
      if (rho > thr) {
        b_new = (rho - thr) / col_sq[j];
      } else if (rho < -thr) {
        b_new = (rho + thr) / col_sq[j];
      }
      double delta = b_new - beta[j];
      if (delta != 0.0) {
        r -= delta * X.col(j);
        beta[j] = b_new;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) {
      m.converged = true;
      break;
    }
  }
  m.beta = beta;
  return m;
}

double weighted_decorrelation_objective(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& weights) {
  const double n = static_cast<double>(X.rows());
  Eigen::VectorXd mean = X.transpose() * weights / n;
  Eigen::MatrixXd C =
      X.transpose() * weights.asDiagonal() * X / n - mean * mean.transpose();
  C.diagonal().setZero();
  return C.squaredNorm();
}

std::pair<LinearModel, Eigen::VectorXd> dwr_fit(const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& Y,
                                                const DwrConfig& cfg) {
  check_xy(X, Y);
  if (X.rows() < X.cols()) throw DataError("dwr_fit: fewer rows than columns");
  const long n = X.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);

  for (int it = 0; it < cfg.iters; ++it) {
    Eigen::VectorXd mean = X.transpose() * w / double(n);
    Eigen::MatrixXd C =
        X.transpose() * w.asDiagonal() * X / double(n) - mean * mean.transpose();
    C.diagonal().setZero();
    // dObj/dw_i = (2/n) * (x_i^T C x_i - 2 x_i^T C mean)
    Eigen::MatrixXd U = X * C;
    Eigen::VectorXd grad =
        (2.0 / double(n)) * (U.cwiseProduct(X).rowwise().sum() - 2.0 * (U * mean));
    if (!grad.allFinite()) {
      throw DivergenceError("dwr weight gradient diverged at iteration " +
                            std::to_string(it));
    }
    w -= (cfg.lr * double(n)) * grad;
    w = w.cwiseMax(0.0);
    double total = w.sum();
    if (total <= 0) {
      throw DivergenceError("dwr weights collapsed to zero at iteration " +
                            std::to_string(it));
    }
    w *= double(n) / total;  // mean(w) = 1
  }

  // Weighted least squares via QR on the sqrt-weight-scaled system.
  Eigen::VectorXd s = w.cwiseSqrt();
  Eigen::MatrixXd Xw = s.asDiagonal() * X;
  Eigen::VectorXd Yw = s.asDiagonal() * Y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  if (qr.rank() < X.cols()) {
    throw DataError("dwr_fit: weighted design matrix is rank-deficient");
  }
  LinearModel m;
  m.method = Method::kDwr;
  m.beta = qr.solve(Yw);
  return {std::move(m), std::move(w)};
}

}  // namespace cfr
