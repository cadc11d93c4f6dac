// Acceptance suite: one check per release criterion, one PASS/FAIL line each.
// Exit code is the number of failed criteria. Tolerances are pinned here and
// are the contract for every future change.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cfr/classifier.hpp"
#include "cfr/datagen.hpp"
#include "cfr/harness.hpp"
#include "cfr/metrics.hpp"
#include "cfr/regressors.hpp"

using namespace cfr;

namespace {

// --- pinned tolerances ------------------------------------------------------
constexpr double kGradRelTol = 1e-5;        // criterion 1
constexpr int kGradInstances = 20;          // criterion 1
constexpr double kReductionTol = 1e-12;     // criterion 2
constexpr double kOlsOracleTol = 1e-10;     // criterion 3
constexpr double kLassoOlsTol = 1e-4;       // criterion 3
constexpr double kVarSTarget = 0.68;        // criterion 4
constexpr double kVarSTol = 0.02;           // criterion 4
constexpr double kCovSTarget = 0.16;        // criterion 4
constexpr double kCovSTol = 0.02;           // criterion 4
constexpr double kNoiseStd = 0.3;           // criterion 4
constexpr double kNoiseStdTol = 0.01;       // criterion 4
constexpr double kBiasCorrMin = 0.1;        // criterion 4
constexpr double kBveRatioMax = 0.6;        // criterion 5a
constexpr double kSeRatioMax = 0.7;         // criterion 5b
constexpr double kOlsBveLo = 0.05;          // criterion 5c
constexpr double kOlsBveHi = 0.15;          // criterion 5c
constexpr int kSweepTrainReps = 20;         // criteria 5 and 6
constexpr int kSweepTestReps = 2;           // criteria 5 and 6
constexpr double kToyAccuracyMin = 0.98;    // criterion 8
constexpr double kDescentFraction = 0.9;    // criterion 8

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %d %s: %s\n", criterion, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::VectorXd random_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

double rel_err(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

// --- criterion 1: analytic gradients vs central differences -----------------
void criterion_1() {
  const double h = 1e-6;
  double worst = 0.0;
  Rng rng(1001);

  for (int inst = 0; inst < kGradInstances; ++inst) {
    int b = 2 + int(rng.next_u64() % 7);
    int p = 2 + int(rng.next_u64() % 5);
    Eigen::MatrixXd X = random_matrix(b, p, rng);
    RectifierWeights W = init_weights(p, InitScheme::kUniformSmall, rng);
    W.w *= 30.0;
    W.w.diagonal().setZero();
    Eigen::MatrixXd g = reconstruction_grad(X, W);
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) {
        if (j == k) continue;
        RectifierWeights up = W, dn = W;
        up.w(j, k) += h;
        dn.w(j, k) -= h;
        double num = (reconstruction_loss(X, up) - reconstruction_loss(X, dn)) / (2 * h);
        worst = std::max(worst, rel_err(g(j, k), num));
      }
    }
  }

  for (int inst = 0; inst < kGradInstances; ++inst) {
    int b = 3 + int(rng.next_u64() % 6);
    int p = 2 + int(rng.next_u64() % 5);
    Eigen::MatrixXd X = random_matrix(b, p, rng);
    Eigen::VectorXd Y = random_vector(b, rng);
    RectifierWeights W = init_weights(p, InitScheme::kUniformSmall, rng);
    W.w *= 20.0;
    W.w.diagonal().setZero();
    Eigen::VectorXd beta = random_vector(p, rng);
    Eigen::VectorXd g = cfr_grad_beta(X, Y, W, beta);
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd up = beta, dn = beta;
      up[j] += h;
      dn[j] -= h;
      double num = (cfr_loss(X, Y, W, up) - cfr_loss(X, Y, W, dn)) / (2 * h);
      worst = std::max(worst, rel_err(g[j], num));
    }
  }

  for (int inst = 0; inst < kGradInstances; ++inst) {
    int b = 3 + int(rng.next_u64() % 4);
    int p = 2 + int(rng.next_u64() % 3);
    int C = 2 + int(rng.next_u64() % 2);
    Eigen::MatrixXd F = random_matrix(b, p, rng);
    std::vector<int> labels;
    for (int i = 0; i < b; ++i) labels.push_back(int(rng.next_u64() % std::uint64_t(C)));
    CfrClassifier clf;
    clf.C = C;
    clf.z_weights = random_matrix(p, C, rng);
    clf.class_bias = random_vector(C, rng);
    clf.weights = init_weights(p, InitScheme::kUniformSmall, rng);
    clf.weights.w *= 30.0;
    clf.weights.w.diagonal().setZero();
    ClassifierGrads g = classifier_ce_grads(F, labels, clf);
    auto loss_at = [&](const CfrClassifier& c) {
      return ce_loss(cfr_logits(F, c), labels);
    };
    for (int j = 0; j < p; ++j) {
      for (int c = 0; c < C; ++c) {
        CfrClassifier up = clf, dn = clf;
        up.z_weights(j, c) += h;
        dn.z_weights(j, c) -= h;
        worst = std::max(worst, rel_err(g.z_weights(j, c),
                                        (loss_at(up) - loss_at(dn)) / (2 * h)));
      }
    }
    for (int c = 0; c < C; ++c) {
      CfrClassifier up = clf, dn = clf;
      up.class_bias[c] += h;
      dn.class_bias[c] -= h;
      worst = std::max(worst,
                       rel_err(g.class_bias[c], (loss_at(up) - loss_at(dn)) / (2 * h)));
    }
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) {
        if (j == k) continue;
        CfrClassifier up = clf, dn = clf;
        up.weights.w(j, k) += h;
        dn.weights.w(j, k) -= h;
        worst =
            std::max(worst, rel_err(g.w(j, k), (loss_at(up) - loss_at(dn)) / (2 * h)));
      }
    }
  }

  report(1, worst < kGradRelTol,
         "gradients vs central differences on " + std::to_string(3 * kGradInstances) +
             " instances, max rel err " + fmt(worst) + " (tol " + fmt(kGradRelTol) +
             ")");
}

// --- criterion 2: W = 0 reduction identities ---------------------------------
void criterion_2() {
  Rng rng(2002);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    int b = 3 + int(rng.next_u64() % 10);
    int p = 2 + int(rng.next_u64() % 6);
    Eigen::MatrixXd X = random_matrix(b, p, rng);
    Eigen::VectorXd Y = random_vector(b, rng);
    Eigen::VectorXd beta = random_vector(p, rng);
    RectifierWeights zero{Eigen::MatrixXd::Zero(p, p)};

    double rss = (Y - X * beta).squaredNorm();
    worst = std::max(worst, std::abs(cfr_loss(X, Y, zero, beta, 0.0) - rss));

    int C = 2 + int(rng.next_u64() % 3);
    CfrClassifier clf;
    clf.C = C;
    clf.z_weights = random_matrix(p, C, rng);
    clf.class_bias = random_vector(C, rng);
    clf.weights = zero;
    LinearClassifier lin;
    lin.C = C;
    lin.z_weights = clf.z_weights;
    lin.class_bias = clf.class_bias;
    worst = std::max(
        worst, (cfr_logits(X, clf) - linear_logits(X, lin)).cwiseAbs().maxCoeff());
  }
  report(2, worst <= kReductionTol,
         "W=0 reductions (regression RSS, classifier logits), max abs diff " +
             fmt(worst) + " (tol " + fmt(kReductionTol) + ")");
}

// --- criterion 3: baseline oracles -------------------------------------------
void criterion_3() {
  Rng rng(3003);
  double worst_ols = 0, worst_ridge = 0, worst_lasso = 0, worst_dead = 0;
  for (int inst = 0; inst < 10; ++inst) {
    Eigen::MatrixXd X = random_matrix(20, 4, rng);
    Eigen::VectorXd Y = random_vector(20, rng);
    Eigen::VectorXd brute = (X.transpose() * X).ldlt().solve(X.transpose() * Y);
    LinearModel ols = ols_fit(X, Y);
    worst_ols = std::max(worst_ols, (ols.beta - brute).lpNorm<Eigen::Infinity>());

    LinearModel ridge0 = ridge_fit(X, Y, 0.0);
    worst_ridge =
        std::max(worst_ridge, (ridge0.beta - ols.beta).lpNorm<Eigen::Infinity>());

    LinearModel lasso0 = lasso_fit(X, Y, 0.0);
    worst_lasso =
        std::max(worst_lasso, (lasso0.beta - ols.beta).lpNorm<Eigen::Infinity>());

    double lambda_max = 2.0 * (X.transpose() * Y).lpNorm<Eigen::Infinity>();
    LinearModel dead = lasso_fit(X, Y, lambda_max * (1.0 + 1e-9));
    worst_dead = std::max(worst_dead, dead.beta.lpNorm<Eigen::Infinity>());
  }
  bool ok = worst_ols < kOlsOracleTol && worst_ridge < kOlsOracleTol &&
            worst_lasso < kLassoOlsTol && worst_dead == 0.0;
  report(3, ok,
         "ols vs brute " + fmt(worst_ols) + " (tol " + fmt(kOlsOracleTol) +
             "), ridge(0) vs ols " + fmt(worst_ridge) + ", lasso(0) vs ols " +
             fmt(worst_lasso) + " (tol " + fmt(kLassoOlsTol) +
             "), lasso above lambda_max max|beta| " + fmt(worst_dead));
}

// --- criterion 4: generator statistics ---------------------------------------
void criterion_4() {
  EnvironmentSpec spec;
  spec.n = 100000;
  spec.p = 10;
  spec.seed = 4004;
  Rng rng(spec.seed);
  auto [S, V, Z] = generate_covariates(spec, rng);

  auto var = [](const Eigen::VectorXd& a) {
    double m = a.mean();
    return (a.array() - m).square().sum() / double(a.size() - 1);
  };
  auto cov = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return ((a.array() - a.mean()) * (b.array() - b.mean())).sum() /
           double(a.size() - 1);
  };

  double var_lo = 1e9, var_hi = -1e9, cov_lo = 1e9, cov_hi = -1e9;
  for (int i = 0; i < 5; ++i) {
    double v = var(S.col(i));
    var_lo = std::min(var_lo, v);
    var_hi = std::max(var_hi, v);
  }
  for (int i = 0; i + 1 < 5; ++i) {
    double c = cov(S.col(i), S.col(i + 1));
    cov_lo = std::min(cov_lo, c);
    cov_hi = std::max(cov_hi, c);
  }
  bool var_ok = var_lo > kVarSTarget - kVarSTol && var_hi < kVarSTarget + kVarSTol;
  bool cov_ok = cov_lo > kCovSTarget - kCovSTol && cov_hi < kCovSTarget + kCovSTol;

  Eigen::VectorXd beta_s = true_coefficients(5);
  Rng nrng(4005);
  Eigen::VectorXd y = generate_outcomes(S, V, beta_s, Eigen::VectorXd::Zero(5),
                                        OutcomeForm::kPoly, kNoiseStd, nrng);
  Eigen::VectorXd f(spec.n);
  for (int i = 0; i < spec.n; ++i)
    f[i] = stable_signal(S.row(i).transpose(), beta_s, OutcomeForm::kPoly);
  double noise_sd = std::sqrt(var(y - f));
  bool noise_ok = std::abs(noise_sd - kNoiseStd) < kNoiseStdTol;

  auto biased_corr = [&](double r) {
    EnvironmentSpec b = spec;
    b.r_bias = r;
    b.seed = 4006;
    Dataset ds = generate_environment(b);
    Eigen::VectorXd sig(ds.n());
    for (int i = 0; i < ds.n(); ++i) {
      sig[i] = stable_signal(ds.X.row(i).head(5).transpose(), ds.beta_s,
                             ds.spec.outcome_form);
    }
    Eigen::VectorXd vb = ds.X.col(5);
    return cov(vb, sig) / std::sqrt(var(vb) * var(sig));
  };
  double corr_pos = biased_corr(1.7);
  double corr_neg = biased_corr(-1.7);
  bool corr_ok = corr_pos > kBiasCorrMin && corr_neg < -kBiasCorrMin;

  report(4, var_ok && cov_ok && noise_ok && corr_ok,
         "n=100000: Var(S) in [" + fmt(var_lo) + "," + fmt(var_hi) + "] (want " +
             fmt(kVarSTarget) + "+-" + fmt(kVarSTol) + "), Cov(S_i,S_i+1) in [" +
             fmt(cov_lo) + "," + fmt(cov_hi) + "] (want " + fmt(kCovSTarget) + "+-" +
             fmt(kCovSTol) + "), noise sd " + fmt(noise_sd) + " (want " +
             fmt(kNoiseStd) + "+-" + fmt(kNoiseStdTol) + "), biased corr +r " +
             fmt(corr_pos) + " / -r " + fmt(corr_neg) + " (want |corr| > " +
             fmt(kBiasCorrMin) + ", matching sign)");
}

// --- criteria 5 and 6: reference-scenario trends ------------------------------
Scenario trend_scenario(const std::string& name, int n, int p, double r) {
  Scenario s;
  s.name = name;
  s.train_spec.n = n;
  s.train_spec.p = p;
  s.train_spec.outcome_form = OutcomeForm::kPoly;
  s.train_spec.r_bias = r;
  MethodSpec ols{Method::kOls};
  MethodSpec cfr;
  cfr.method = Method::kCfr;
  cfr.train = table1_cfr_train_config();
  s.methods = {ols, cfr};
  s.train_reps = kSweepTrainReps;
  s.test_reps_per_env = kSweepTestReps;
  return s;
}

void criterion_5() {
  ScenarioResult res = run_scenario(trend_scenario("reference", 2000, 10, 1.7));
  const StabilityReport& ols = res.by_method.at("ols");
  const StabilityReport& cfr = res.by_method.at("cfr");

  double bve_ratio = cfr.beta_v_error_mean / ols.beta_v_error_mean;
  double se_ratio = cfr.se / ols.se;
  bool a = bve_ratio <= kBveRatioMax;
  bool b = se_ratio <= kSeRatioMax;
  bool c = ols.beta_v_error_mean >= kOlsBveLo && ols.beta_v_error_mean <= kOlsBveHi;
  report(5, a && b && c,
         "n=2000 p=10 r=1.7, " + std::to_string(kSweepTrainReps) +
             " reps, 12-env grid: cfr/ols beta_v_error " + fmt(cfr.beta_v_error_mean) +
             "/" + fmt(ols.beta_v_error_mean) + " ratio " + fmt(bve_ratio) + " (max " +
             fmt(kBveRatioMax) + "), cfr/ols SE " + fmt(cfr.se) + "/" + fmt(ols.se) +
             " ratio " + fmt(se_ratio) + " (max " + fmt(kSeRatioMax) +
             "), ols beta_v_error in [" + fmt(kOlsBveLo) + "," + fmt(kOlsBveHi) + "]");
}

void criterion_6() {
  std::vector<double> rs{1.5, 1.7, 2.0};
  std::vector<double> ols_bve, cfr_bve;
  for (double r : rs) {
    ScenarioResult res =
        run_scenario(trend_scenario("rsweep" + fmt(r), 2000, 20, r));
    ols_bve.push_back(res.by_method.at("ols").beta_v_error_mean);
    cfr_bve.push_back(res.by_method.at("cfr").beta_v_error_mean);
  }
  bool monotone = ols_bve[0] < ols_bve[1] && ols_bve[1] < ols_bve[2];
  bool below = cfr_bve[0] < ols_bve[0] && cfr_bve[1] < ols_bve[1] &&
               cfr_bve[2] < ols_bve[2];
  report(6, monotone && below,
         "n=2000 p=20, r in {1.5,1.7,2.0}: ols beta_v_error " + fmt(ols_bve[0]) +
             " -> " + fmt(ols_bve[1]) + " -> " + fmt(ols_bve[2]) +
             (monotone ? " (monotone)" : " (NOT monotone)") + ", cfr " +
             fmt(cfr_bve[0]) + " / " + fmt(cfr_bve[1]) + " / " + fmt(cfr_bve[2]) +
             (below ? " (below ols at every r)" : " (NOT below ols everywhere)"));
}

// --- criterion 7: metrics unit checks ----------------------------------------
void criterion_7() {
  EnvResult e1{1.5, {1.0}};
  EnvResult e2{2.0, {3.0}};
  auto [ae, se] = ae_se({e1, e2});
  bool pair_ok =
      std::abs(ae - 2.0) < 1e-15 && std::abs(se - std::sqrt(2.0)) < 1e-12;

  EnvResult c1{1.3, {0.7}}, c2{1.7, {0.7}}, c3{2.5, {0.7}};
  auto [ae2, se2] = ae_se({c1, c2, c3});
  bool zero_ok = se2 == 0.0 && std::abs(ae2 - 0.7) < 1e-15;

  Eigen::VectorXd t(2), hat(2);
  t << 1.0, 1.0;
  hat << 0.0, 0.0;
  bool be_ok = std::abs(beta_error(hat, t, {0, 1}) - 1.0) < 1e-15;

  report(7, pair_ok && zero_ok && be_ok,
         "AE/SE of (1,3) = (" + fmt(ae) + "," + fmt(se) +
             ") want (2,sqrt(2)); SE of equal means = " + fmt(se2) +
             "; beta_error((0,0) vs (1,1)) = " + fmt(beta_error(hat, t, {0, 1})));
}

// --- criterion 8: classification at toy scale --------------------------------
void criterion_8() {
  // Three separable classes over four informative features plus one spurious
  // feature that tracks the label in training data.
  const int per_class = 60, C = 3, p = 5;
  Rng rng(8008);
  Eigen::MatrixXd F(per_class * C, p);
  std::vector<int> labels(size_t(per_class) * C);
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < per_class; ++i) {
      int row = c * per_class + i;
      for (int j = 0; j < 4; ++j) {
        double center = (j == c) ? 2.5 : -1.0;
        F(row, j) = center + 0.5 * rng.normal();
      }
      F(row, 4) = double(c) - 1.0 + 0.3 * rng.normal();  // spurious tracker
      labels[size_t(row)] = c;
    }
  }

  ClassifierTrainConfig cfg;
  cfg.epochs = 100;
  cfg.lr_decay_epochs = {70, 85};
  CfrClassifier clf = train_cfr_classifier(F, labels, cfg);
  double acc = accuracy(predict_labels(F, clf), labels);

  int drops = 0;
  for (size_t e = 1; e < clf.history.size(); ++e) {
    if (clf.history[e] < clf.history[e - 1]) ++drops;
  }
  double drop_frac = double(drops) / double(clf.history.size() - 1);

  ClassifierTrainConfig frozen = cfg;
  frozen.lr_w = 0.0;
  CfrClassifier cfr0 = train_cfr_classifier(F, labels, frozen);
  LinearClassifier base = train_linear_classifier(F, labels, frozen);
  bool lockstep = cfr0.history.size() == base.history.size();
  double hist_diff = 0.0;
  if (lockstep) {
    for (size_t e = 0; e < cfr0.history.size(); ++e) {
      if (cfr0.history[e] != base.history[e]) lockstep = false;
      hist_diff = std::max(hist_diff, std::abs(cfr0.history[e] - base.history[e]));
    }
  }

  report(8, acc >= kToyAccuracyMin && drop_frac >= kDescentFraction && lockstep,
         "3-class toy task: train accuracy " + fmt(acc) + " (min " +
             fmt(kToyAccuracyMin) + "), loss decreasing in " + fmt(drop_frac * 100) +
             "% of epochs (min " + fmt(kDescentFraction * 100) +
             "%), W=0 loss vs baseline max diff " + fmt(hist_diff) +
             (lockstep ? " (bit-for-bit)" : " (MISMATCH)"));
}

// --- criterion 9: determinism -------------------------------------------------
void criterion_9() {
  Scenario s;
  s.name = "determinism";
  s.train_spec.n = 300;
  s.train_spec.p = 6;
  s.train_spec.outcome_form = OutcomeForm::kPoly;
  s.train_spec.r_bias = 1.7;
  MethodSpec cfr;
  cfr.method = Method::kCfr;
  cfr.train.epochs = 30;
  cfr.train.batch_size = 16;  // exercises the shuffling stream
  cfr.train.grad_form = GradForm::kMean;
  cfr.train.lr_beta = 0.05;
  s.methods = {MethodSpec{Method::kOls}, cfr};
  s.test_grid = {-2.0, 1.5, 2.5};
  s.train_reps = 3;
  s.test_reps_per_env = 2;

  std::string a = records_to_csv(run_scenario(s, 1).records);
  std::string b = records_to_csv(run_scenario(s, 1).records);
  std::string c = records_to_csv(run_scenario(s, 4).records);
  bool rerun_ok = a == b;
  bool threads_ok = a == c;
  report(9, rerun_ok && threads_ok,
         std::string("sweep rerun byte-identical: ") + (rerun_ok ? "yes" : "NO") +
             "; 4-thread run byte-identical to 1-thread: " +
             (threads_ok ? "yes" : "NO"));
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  auto secs = std::chrono::duration<double>(clock::now() - t0).count();
  std::printf("%d/9 criteria passed in %.1f s\n", 9 - g_failures, secs);
  return g_failures;
}
