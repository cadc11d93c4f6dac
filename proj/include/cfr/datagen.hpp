#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cfr/rng.hpp"

namespace cfr {

enum class OutcomeForm { kPoly, kExp, kLinearOnly };

std::string to_string(OutcomeForm form);
OutcomeForm outcome_form_from_string(const std::string& s);

// Description of one synthetic environment: sample count, feature dimension
// (split evenly into stable columns S and unstable columns V), the outcome
// form, and the selection-bias rate applied during sampling.
struct EnvironmentSpec {
  int n = 0;
  int p = 0;
  OutcomeForm outcome_form = OutcomeForm::kPoly;
  std::optional<double> r_bias;  // absent => unbiased sampling
  int vb_size = -1;              // -1 => default max(1, floor(0.1*p))
  double noise_std = 0.3;
  std::uint64_t seed = 0;

  int p_s() const { return p / 2; }
  int p_v() const { return p / 2; }
  int effective_vb_size() const;

  void validate() const;  // throws ConfigError
};

// A generated sample with its ground truth. Treated as immutable once
// constructed; all consumers take it by const reference.
struct Dataset {
  Eigen::MatrixXd X;  // n x p, columns ordered [S_1..S_{p_s}, V_1..V_{p_v}]
  Eigen::VectorXd Y;
  Eigen::VectorXd beta_s;
  Eigen::VectorXd beta_v;  // all zeros for synthetic data
  std::vector<bool> stable_mask;
  EnvironmentSpec spec;
  std::optional<Eigen::MatrixXd> trace;  // auxiliary Z draws, kept for tests
  std::uint64_t candidates_drawn = 0;    // rejection-sampler work counter

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  Eigen::VectorXd beta_full() const;  // [beta_s; beta_v]
};

struct SelectionWeight {
  Eigen::VectorXd d;  // distances D_i, one per biased feature
  double prob = 1.0;  // acceptance probability in (0, 1]
};

// Repeating coefficient pattern {1/3, -2/3, 1, -1/3, 2/3, -1} truncated to
// length p_s.
Eigen::VectorXd true_coefficients(int p_s);

// Draws V and Z i.i.d. standard normal and builds the stable block as
// S_{,i} = 0.8*Z_{,i} + 0.2*Z_{,i+1}.
std::tuple<Eigen::MatrixXd, Eigen::MatrixXd, Eigen::MatrixXd> generate_covariates(
    const EnvironmentSpec& spec, Rng& rng);

// Noiseless outcome signal carried by the stable features: S.beta_s plus a
// nonlinear term in the first three stable features (product for kPoly,
// exponentiated product for kExp, nothing for kLinearOnly).
double stable_signal(const Eigen::VectorXd& s_row, const Eigen::VectorXd& beta_s,
                     OutcomeForm form);

Eigen::VectorXd generate_outcomes(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                                  const Eigen::VectorXd& beta_s,
                                  const Eigen::VectorXd& beta_v, OutcomeForm form,
                                  double noise_std, Rng& rng);

// Acceptance probability of one candidate sample: D_i = |fS - sign(r)*v_i|
// over the biased features, P = prod_i |r|^(-5*D_i).
SelectionWeight selection_probability(double fS, const Eigen::VectorXd& v_b, double r);

inline constexpr std::uint64_t kDefaultCandidateCap = 100'000'000ULL;

// Generates one environment. Unbiased specs sample directly; biased specs
// rejection-sample candidates until n are accepted or the candidate cap is
// exhausted (GenerationStallError). keep_trace retains the Z draws.
Dataset generate_environment(const EnvironmentSpec& spec, Rng& rng,
                             bool keep_trace = false,
                             std::uint64_t candidate_cap = kDefaultCandidateCap);

// Convenience overload seeding the stream from spec.seed.
Dataset generate_environment(const EnvironmentSpec& spec, bool keep_trace = false,
                             std::uint64_t candidate_cap = kDefaultCandidateCap);

// CSV (header x1,...,xp,y) plus JSON sidecar with the spec and ground truth.
// Round-trips numeric fields exactly.
void write_dataset(const Dataset& ds, const std::string& data_path,
                   const std::string& meta_path);
Dataset read_dataset(const std::string& data_path, const std::string& meta_path);

}  // namespace cfr
