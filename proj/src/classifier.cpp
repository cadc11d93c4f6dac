#include "cfr/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "cfr/errors.hpp"
#include "cfr/numio.hpp"

namespace cfr {

void ClassifierTrainConfig::validate() const {
  if (lr_model < 0 || lr_w < 0) {
    throw ConfigError("classifier learning rates must be >= 0 (0 disables the step)");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0 (0 = full batch)");
  if (!(lr_decay_factor > 0)) throw ConfigError("lr_decay_factor must be > 0");
  int prev = -1;
  for (int e : lr_decay_epochs) {
    if (e <= prev) throw ConfigError("lr_decay_epochs must be strictly increasing");
    if (e >= epochs) throw ConfigError("lr_decay_epochs entries must be < epochs");
    prev = e;
  }
}

namespace {

void check_labels(const std::vector<int>& labels, long n, int C) {
  if (static_cast<long>(labels.size()) != n) {
    throw DataError("labels length " + std::to_string(labels.size()) +
                    " does not match " + std::to_string(n) + " feature rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= C) {
      throw DataError("label " + std::to_string(y) + " outside [0, " +
                      std::to_string(C) + ")");
    }
  }
}

// softmax(logits) - onehot(labels), the logit gradient of the summed
// cross-entropy.
Eigen::MatrixXd softmax_minus_onehot(const Eigen::MatrixXd& logits,
                                     const std::vector<int>& labels) {
  Eigen::MatrixXd P = logits;
  for (long i = 0; i < P.rows(); ++i) {
    double m = P.row(i).maxCoeff();
    P.row(i) = (P.row(i).array() - m).exp();
    P.row(i) /= P.row(i).sum();
    P(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  }
  return P;
}

int infer_class_count(const std::vector<int>& labels) {
  int c = 0;
  for (int y : labels) {
    if (y < 0) throw DataError("negative class label " + std::to_string(y));
    c = std::max(c, y + 1);
  }
  if (c < 2) throw DataError("need at least 2 classes, labels cover " + std::to_string(c));
  return c;
}

}  // namespace

Eigen::MatrixXd cfr_logits(const Eigen::MatrixXd& F, const CfrClassifier& clf) {
  if (F.cols() != clf.z_weights.rows()) {
    throw DataError("cfr_logits: " + std::to_string(F.cols()) + " features vs " +
                    std::to_string(clf.z_weights.rows()) + " weight rows");
  }
  Eigen::MatrixXd logits = rectify(F, clf.weights) * clf.z_weights + F * clf.z_weights;
  logits.rowwise() += clf.class_bias.transpose();
  return logits;
}

Eigen::MatrixXd linear_logits(const Eigen::MatrixXd& F, const LinearClassifier& clf) {
  if (F.cols() != clf.z_weights.rows()) {
    throw DataError("linear_logits: feature/weight dimension mismatch");
  }
  Eigen::MatrixXd logits = F * clf.z_weights;
  logits.rowwise() += clf.class_bias.transpose();
  return logits;
}

double ce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  check_labels(labels, logits.rows(), static_cast<int>(logits.cols()));
  double loss = 0.0;
  for (long i = 0; i < logits.rows(); ++i) {
    double m = logits.row(i).maxCoeff();
    double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    loss += lse - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return loss;
}

ClassifierGrads classifier_ce_grads(const Eigen::MatrixXd& F,
                                    const std::vector<int>& labels,
                                    const CfrClassifier& clf) {
  Eigen::MatrixXd G = softmax_minus_onehot(cfr_logits(F, clf), labels);
  Eigen::MatrixXd M = F + rectify(F, clf.weights);  // F*(I+W)
  ClassifierGrads out;
  out.z_weights = M.transpose() * G;
  out.class_bias = G.colwise().sum().transpose();
  out.w = F.transpose() * G * clf.z_weights.transpose();
  out.w.diagonal().setZero();
  return out;
}

namespace {

// One trainer drives both the rectified classifier and the plain baseline;
// with the rectifier disabled every computation reduces to the baseline's.
template <typename Logits, typename ModelGradM>
std::vector<double> run_classifier_sgd(const Eigen::MatrixXd& F,
                                       const std::vector<int>& labels,
                                       const ClassifierTrainConfig& cfg, Rng& rng,
                                       Eigen::MatrixXd& z, Eigen::VectorXd& bias,
                                       RectifierWeights* W, Logits logits_of,
                                       ModelGradM grad_m_of) {
  const long n = F.rows();
  const double denom_full = cfg.grad_form == GradForm::kMean ? double(n) : 1.0;
  std::vector<double> history;
  double lr_model = cfg.lr_model;
  double lr_w = cfg.lr_w;
  std::set<int> decay(cfg.lr_decay_epochs.begin(), cfg.lr_decay_epochs.end());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (decay.count(epoch)) {
      lr_model *= cfg.lr_decay_factor;
      lr_w *= cfg.lr_decay_factor;
    }
    auto batches = make_batches(static_cast<int>(n), cfg.batch_size, rng);
    Eigen::MatrixXd Fb;
    std::vector<int> yb;
    for (const auto& idx : batches) {
      Fb.resize(static_cast<long>(idx.size()), F.cols());
      yb.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        Fb.row(static_cast<long>(i)) = F.row(idx[i]);
        yb[i] = labels[static_cast<std::size_t>(idx[i])];
      }
      const double scale =
          cfg.grad_form == GradForm::kMean ? 1.0 / double(Fb.rows()) : 1.0;
      if (W != nullptr && lr_w > 0) {
        Eigen::MatrixXd gw = reconstruction_grad(Fb, *W);
        *W = sgd_step_w(*W, scale * gw, lr_w);
      }
      if (lr_model > 0) {
        Eigen::MatrixXd G = softmax_minus_onehot(logits_of(Fb), yb);
        Eigen::MatrixXd gz = grad_m_of(Fb).transpose() * G;
        Eigen::VectorXd gb = G.colwise().sum().transpose();
        if (!gz.allFinite() || !gb.allFinite()) {
          throw DivergenceError("classifier gradient diverged at epoch " +
                                std::to_string(epoch));
        }
        z -= (lr_model * scale) * gz;
        bias -= (lr_model * scale) * gb;
      }
    }
    double loss = ce_loss(logits_of(F), labels) / denom_full;
    if (!std::isfinite(loss)) {
      throw DivergenceError("classifier loss diverged at epoch " + std::to_string(epoch) +
                            " (lr_model=" + numio::format_double(cfg.lr_model) + ")");
    }
    history.push_back(loss);
  }
  return history;
}

}  // namespace

CfrClassifier train_cfr_classifier(const Eigen::MatrixXd& F, const std::vector<int>& labels,
                                   const ClassifierTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const int p = static_cast<int>(F.cols());
  const int C = infer_class_count(labels);
  check_labels(labels, F.rows(), C);

  CfrClassifier clf;
  clf.C = C;
  clf.z_weights = Eigen::MatrixXd::Zero(p, C);
  clf.class_bias = Eigen::VectorXd::Zero(C);
  clf.weights = RectifierWeights{Eigen::MatrixXd::Zero(p, p)};

  clf.history = run_classifier_sgd(
      F, labels, cfg, rng, clf.z_weights, clf.class_bias, &clf.weights,
      [&](const Eigen::MatrixXd& Fb) { return cfr_logits(Fb, clf); },
      [&](const Eigen::MatrixXd& Fb) -> Eigen::MatrixXd {
        return Fb + rectify(Fb, clf.weights);
      });
  return clf;
}

CfrClassifier train_cfr_classifier(const Eigen::MatrixXd& F, const std::vector<int>& labels,
                                   const ClassifierTrainConfig& cfg) {
  Rng rng(cfg.seed);
  return train_cfr_classifier(F, labels, cfg, rng);
}

LinearClassifier train_linear_classifier(const Eigen::MatrixXd& F,
                                         const std::vector<int>& labels,
                                         const ClassifierTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const int p = static_cast<int>(F.cols());
  const int C = infer_class_count(labels);
  check_labels(labels, F.rows(), C);

  LinearClassifier clf;
  clf.C = C;
  clf.z_weights = Eigen::MatrixXd::Zero(p, C);
  clf.class_bias = Eigen::VectorXd::Zero(C);

  clf.history = run_classifier_sgd(
      F, labels, cfg, rng, clf.z_weights, clf.class_bias, nullptr,
      [&](const Eigen::MatrixXd& Fb) { return linear_logits(Fb, clf); },
      [&](const Eigen::MatrixXd& Fb) -> Eigen::MatrixXd { return Fb; });
  return clf;
}

LinearClassifier train_linear_classifier(const Eigen::MatrixXd& F,
                                         const std::vector<int>& labels,
                                         const ClassifierTrainConfig& cfg) {
  Rng rng(cfg.seed);
  return train_linear_classifier(F, labels, cfg, rng);
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (long i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;  // strict: ties keep lowest
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::vector<int> predict_labels(const Eigen::MatrixXd& F, const CfrClassifier& clf) {
  return argmax_rows(cfr_logits(F, clf));
}

std::vector<int> predict_labels_linear(const Eigen::MatrixXd& F,
                                       const LinearClassifier& clf) {
  return argmax_rows(linear_logits(F, clf));
}

void write_embeddings(const Eigen::MatrixXd& F, const std::vector<int>& labels,
                      const std::string& path) {
  check_labels(labels, F.rows(), std::numeric_limits<int>::max());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (long j = 0; j < F.cols(); ++j) out << 'f' << (j + 1) << ',';
  out << "label\n";
  for (long i = 0; i < F.rows(); ++i) {
    for (long j = 0; j < F.cols(); ++j) out << numio::format_double(F(i, j)) << ',';
    out << labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out.flush()) throw DataError("write failed for " + path);
}

std::pair<Eigen::MatrixXd, std::vector<int>> read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ":1: missing header");
  auto header = numio::split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw DataError(path + ":1: expected header f1,...,fp,label");
  }
  const int p = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < p; ++j) {
    if (header[static_cast<std::size_t>(j)] != "f" + std::to_string(j + 1)) {
      throw DataError(path + ":1: column " + std::to_string(j + 1) + " must be f" +
                      std::to_string(j + 1));
    }
  }
  std::vector<double> values;
  std::vector<int> labels;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    auto fields = numio::split_csv_line(line);
    const std::string where = path + ":" + std::to_string(row + 2);
    if (static_cast<int>(fields.size()) != p + 1) {
      throw DataError(where + ": expected " + std::to_string(p + 1) + " fields, got " +
                      std::to_string(fields.size()));
    }
    for (int j = 0; j < p; ++j) {
      values.push_back(numio::parse_double(fields[static_cast<std::size_t>(j)],
                                           where + ": field " + std::to_string(j + 1)));
    }
    labels.push_back(static_cast<int>(
        numio::parse_int(fields.back(), where + ": label field")));
    ++row;
  }
  if (row == 0) throw DataError(path + ": no data rows");
  Eigen::MatrixXd F(row, p);
  for (int i = 0; i < row; ++i) {
    for (int j = 0; j < p; ++j) F(i, j) = values[static_cast<std::size_t>(i) * p + j];
  }
  return {std::move(F), std::move(labels)};
}

}  // namespace cfr
