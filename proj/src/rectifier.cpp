#include "cfr/rectifier.hpp"

#include <cmath>
#include <string>

#include "cfr/errors.hpp"

namespace cfr {

namespace {

void check_dims(const Eigen::MatrixXd& X, const RectifierWeights& W) {
  if (X.cols() != W.w.rows() || W.w.rows() != W.w.cols()) {
    throw DataError("rectifier: X has " + std::to_string(X.cols()) +
                    " columns but W is " + std::to_string(W.w.rows()) + "x" +
                    std::to_string(W.w.cols()));
  }
}

}  // namespace

RectifierWeights init_weights(int p, InitScheme scheme, Rng& rng) {
  if (p < 2) throw ConfigError("rectifier needs p >= 2, got " + std::to_string(p));
  RectifierWeights W{Eigen::MatrixXd::Zero(p, p)};
  if (scheme == InitScheme::kUniformSmall) {
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) {
        if (j != k) W.w(j, k) = rng.uniform(-0.01, 0.01);
      }
    }
  }
  return W;
}

double reconstruction_loss(const Eigen::MatrixXd& X, const RectifierWeights& W,
                           ReconNorm norm, bool center) {
  check_dims(X, W);
  if (center) {
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    return reconstruction_loss(Xc, W, norm, false);
  }
  const int p = W.p();
  if (norm == ReconNorm::kL1) {
    double loss = 0.0;
    for (long i = 0; i < X.rows(); ++i) {
      for (int j = 0; j < p; ++j) {
        for (int k = 0; k < p; ++k) {
          if (k != j) loss += std::abs(X(i, k) - X(i, j) * W.w(j, k));
        }
      }
    }
    return loss;
  }
  // Squared-L2 via the Gram matrix G = X^T X:
  //   L = (p-1)*||X||_F^2 - 2*<G, W> + sum_j G_jj * ||W_{j,:}||^2
  // (the diagonal of W is zero, so the k != j restriction is implicit).
  Eigen::MatrixXd G = X.transpose() * X;
  double loss = (p - 1) * G.trace();
  loss -= 2.0 * G.cwiseProduct(W.w).sum();
  loss += G.diagonal().dot(W.w.cwiseProduct(W.w).rowwise().sum());
  return loss;
}

Eigen::MatrixXd reconstruction_grad(const Eigen::MatrixXd& X, const RectifierWeights& W,
                                    ReconNorm norm, bool center) {
  check_dims(X, W);
  if (center) {
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    return reconstruction_grad(Xc, W, norm, false);
  }
  const int p = W.p();
  Eigen::MatrixXd grad(p, p);
  if (norm == ReconNorm::kL1) {
    grad.setZero();
    for (long i = 0; i < X.rows(); ++i) {
      for (int j = 0; j < p; ++j) {
        for (int k = 0; k < p; ++k) {
          if (k == j) continue;
          double resid = X(i, k) - X(i, j) * W.w(j, k);
          double s = resid > 0 ? 1.0 : (resid < 0 ? -1.0 : 0.0);
          grad(j, k) -= X(i, j) * s;
        }
      }
    }
    return grad;
  }
  // dL/dW_{jk} = sum_i -2*X_{ij}*(X_{ik} - X_{ij}*W_{jk}) = -2*G_{jk} + 2*G_{jj}*W_{jk}
  Eigen::MatrixXd G = X.transpose() * X;
  grad = -2.0 * G + 2.0 * (G.diagonal().asDiagonal() * W.w);
  grad.diagonal().setZero();
  return grad;
}

Eigen::MatrixXd rectify(const Eigen::MatrixXd& X, const RectifierWeights& W) {
  check_dims(X, W);
  return X * W.w;
}

RectifierWeights sgd_step_w(const RectifierWeights& W, const Eigen::MatrixXd& grad,
                            double lr) {
  if (lr < 0) throw ConfigError("learning rate must be >= 0");
  if (grad.rows() != W.w.rows() || grad.cols() != W.w.cols()) {
    throw DataError("sgd_step_w: gradient shape mismatch");
  }
  if (!grad.allFinite()) {
    throw DivergenceError("non-finite entries in rectifier gradient");
  }
  RectifierWeights out{W.w - lr * grad};
  out.w.diagonal().setZero();
  return out;
}

}  // namespace cfr
