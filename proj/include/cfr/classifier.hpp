#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cfr/optim.hpp"
#include "cfr/rectifier.hpp"
#include "cfr/rng.hpp"

namespace cfr {

// Linear softmax head with a rectified feature pathway: the same weight map
// is applied to the raw features and to their rectified transform, and one
// shared bias is added to the combined logits.
struct CfrClassifier {
  Eigen::MatrixXd z_weights;   // p x C, bias-free linear map
  Eigen::VectorXd class_bias;  // length C, added once to the combined logits
  RectifierWeights weights;    // p x p rectifier
  int C = 0;
  std::vector<double> history;  // per-epoch cross-entropy on the full data
};

// Plain linear softmax baseline (no rectified pathway).
struct LinearClassifier {
  Eigen::MatrixXd z_weights;
  Eigen::VectorXd class_bias;
  int C = 0;
  std::vector<double> history;
};

struct ClassifierTrainConfig {
  double lr_model = 0.1;
  double lr_w = 5e-6;
  int epochs = 350;
  std::vector<int> lr_decay_epochs = {150, 160};
  double lr_decay_factor = 0.1;
  int batch_size = 0;  // 0 => full batch
  std::uint64_t seed = 47;
  GradForm grad_form = GradForm::kMean;

  void validate() const;  // throws ConfigError
};

// Logits of the rectified classifier: (F*W)*z_weights + F*z_weights + bias.
Eigen::MatrixXd cfr_logits(const Eigen::MatrixXd& F, const CfrClassifier& clf);

// Logits of the plain baseline: F*z_weights + bias.
Eigen::MatrixXd linear_logits(const Eigen::MatrixXd& F, const LinearClassifier& clf);

// Sum over the batch of negative log-softmax at the true class, computed
// with max-subtraction stabilization.
double ce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

// Full analytic gradient of ce_loss(cfr_logits(F)) in every parameter.
struct ClassifierGrads {
  Eigen::MatrixXd z_weights;
  Eigen::VectorXd class_bias;
  Eigen::MatrixXd w;  // zero diagonal
};
ClassifierGrads classifier_ce_grads(const Eigen::MatrixXd& F,
                                    const std::vector<int>& labels,
                                    const CfrClassifier& clf);

// Alternating mini-batch SGD: per batch a W step on the reconstruction loss
// over the features, then a model step (z_weights, class_bias) on the
// cross-entropy of the rectified logits. Both learning rates decay by
// lr_decay_factor at each epoch listed in lr_decay_epochs.
CfrClassifier train_cfr_classifier(const Eigen::MatrixXd& F, const std::vector<int>& labels,
                                   const ClassifierTrainConfig& cfg, Rng& rng);
CfrClassifier train_cfr_classifier(const Eigen::MatrixXd& F, const std::vector<int>& labels,
                                   const ClassifierTrainConfig& cfg);

// Same protocol without the rectified pathway (lr_w unused).
LinearClassifier train_linear_classifier(const Eigen::MatrixXd& F,
                                         const std::vector<int>& labels,
                                         const ClassifierTrainConfig& cfg, Rng& rng);
LinearClassifier train_linear_classifier(const Eigen::MatrixXd& F,
                                         const std::vector<int>& labels,
                                         const ClassifierTrainConfig& cfg);

// Row-wise argmax; ties resolve to the lowest class index.
std::vector<int> predict_labels(const Eigen::MatrixXd& F, const CfrClassifier& clf);
std::vector<int> predict_labels_linear(const Eigen::MatrixXd& F, const LinearClassifier& clf);
std::vector<int> argmax_rows(const Eigen::MatrixXd& logits);

// Embedding file: CSV with header f1,...,fp,label.
void write_embeddings(const Eigen::MatrixXd& F, const std::vector<int>& labels,
                      const std::string& path);
std::pair<Eigen::MatrixXd, std::vector<int>> read_embeddings(const std::string& path);

}  // namespace cfr
