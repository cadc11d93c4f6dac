#pragma once

#include <Eigen/Dense>

#include "cfr/rng.hpp"

namespace cfr {

// Per-term norm used by the reconstruction loss.
enum class ReconNorm { kSquaredL2, kL1 };

enum class InitScheme { kZeros, kUniformSmall };

// Feature-rectification weights: row j holds the coefficients with which
// feature j reconstructs every other feature. The diagonal is identically
// zero (no self-reconstruction) and every operation preserves that.
struct RectifierWeights {
  Eigen::MatrixXd w;

  int p() const { return static_cast<int>(w.rows()); }
};

RectifierWeights init_weights(int p, InitScheme scheme, Rng& rng);

// Sum over samples i and features j of ||X_{i,-j} - X_{i,j} * W_{j,-j}||,
// squared-L2 per term by default. `center` subtracts column means from X
// before reconstructing; off by default, so raw features are reconstructed.
double reconstruction_loss(const Eigen::MatrixXd& X, const RectifierWeights& W,
                           ReconNorm norm = ReconNorm::kSquaredL2,
                           bool center = false);

// Analytic gradient of reconstruction_loss in W (subgradient for kL1);
// diagonal forced to zero.
Eigen::MatrixXd reconstruction_grad(const Eigen::MatrixXd& X, const RectifierWeights& W,
                                    ReconNorm norm = ReconNorm::kSquaredL2,
                                    bool center = false);

// The rectification transform X*W.
Eigen::MatrixXd rectify(const Eigen::MatrixXd& X, const RectifierWeights& W);

// W - lr*grad with the diagonal re-zeroed. lr = 0 is a no-op.
RectifierWeights sgd_step_w(const RectifierWeights& W, const Eigen::MatrixXd& grad,
                            double lr);

}  // namespace cfr
