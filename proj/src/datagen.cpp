#include "cfr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfr/errors.hpp"
#include "cfr/numio.hpp"

namespace cfr {

using nlohmann::json;

std::string to_string(OutcomeForm form) {
  switch (form) {
    case OutcomeForm::kPoly: return "poly";
    case OutcomeForm::kExp: return "exp";
    case OutcomeForm::kLinearOnly: return "linear_only";
  }
  throw ConfigError("unknown outcome form");
}

OutcomeForm outcome_form_from_string(const std::string& s) {
  if (s == "poly") return OutcomeForm::kPoly;
  if (s == "exp") return OutcomeForm::kExp;
  if (s == "linear_only") return OutcomeForm::kLinearOnly;
  throw ConfigError("outcome_form must be one of poly, exp, linear_only; got '" + s + "'");
}

int EnvironmentSpec::effective_vb_size() const {
  if (vb_size >= 0) return vb_size;
  return std::min(p_v(), std::max(1, p / 10));
}

void EnvironmentSpec::validate() const {
  if (n <= 0) throw ConfigError("n must be positive, got " + std::to_string(n));
  if (p < 4 || p % 2 != 0) {
    throw ConfigError("p must be an even integer >= 4, got " + std::to_string(p));
  }
  if (outcome_form != OutcomeForm::kLinearOnly && p_s() < 3) {
    throw ConfigError("outcome form '" + to_string(outcome_form) +
                      "' needs at least 3 stable features (p >= 6), got p = " +
                      std::to_string(p));
  }
  if (r_bias) {
    double a = std::abs(*r_bias);
    if (!(a > 1.0) || !(a <= 3.0)) {
      throw ConfigError("r_bias must lie in [-3,-1) U (1,3], got " +
                        numio::format_double(*r_bias));
    }
  }
  if (vb_size != -1 && (vb_size < 0 || vb_size > p_v())) {
    throw ConfigError("vb_size must lie in [0, p/2], got " + std::to_string(vb_size));
  }
  if (!(noise_std >= 0.0)) {
    throw ConfigError("noise_std must be >= 0, got " + numio::format_double(noise_std));
  }
}

Eigen::VectorXd Dataset::beta_full() const {
  Eigen::VectorXd b(beta_s.size() + beta_v.size());
  b << beta_s, beta_v;
  return b;
}

Eigen::VectorXd true_coefficients(int p_s) {
  if (p_s < 1) throw ConfigError("true_coefficients needs p_s >= 1");
  static const double pattern[6] = {1.0 / 3.0, -2.0 / 3.0, 1.0,
                                    -1.0 / 3.0, 2.0 / 3.0, -1.0};
  Eigen::VectorXd beta(p_s);
  for (int i = 0; i < p_s; ++i) beta[i] = pattern[i % 6];
  return beta;
}

namespace {

Eigen::MatrixXd stable_from_aux(const Eigen::MatrixXd& Z, int p_s) {
  Eigen::MatrixXd S(Z.rows(), p_s);
  for (int i = 0; i < p_s; ++i) {
    S.col(i) = 0.8 * Z.col(i) + 0.2 * Z.col(i + 1);
  }
  return S;
}

}  // namespace

std::tuple<Eigen::MatrixXd, Eigen::MatrixXd, Eigen::MatrixXd> generate_covariates(
    const EnvironmentSpec& spec, Rng& rng) {
  spec.validate();
  const int n = spec.n, p_s = spec.p_s(), p_v = spec.p_v();
  Eigen::MatrixXd V(n, p_v);
  for (int j = 0; j < p_v; ++j) {
    for (int i = 0; i < n; ++i) V(i, j) = rng.normal();
  }
  Eigen::MatrixXd Z(n, spec.p);
  for (int j = 0; j < spec.p; ++j) {
    for (int i = 0; i < n; ++i) Z(i, j) = rng.normal();
  }
  return {stable_from_aux(Z, p_s), std::move(V), std::move(Z)};
}

double stable_signal(const Eigen::VectorXd& s_row, const Eigen::VectorXd& beta_s,
                     OutcomeForm form) {
  if (s_row.size() != beta_s.size()) {
    throw DataError("stable_signal: S row and beta_s length mismatch");
  }
  double linear = s_row.dot(beta_s);
  if (form == OutcomeForm::kLinearOnly) return linear;
  if (s_row.size() < 3) {
    throw ConfigError("nonlinear outcome forms need at least 3 stable features");
  }
  double prod = s_row[0] * s_row[1] * s_row[2];
  return form == OutcomeForm::kPoly ? linear + prod : linear + std::exp(prod);
}

Eigen::VectorXd generate_outcomes(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                                  const Eigen::VectorXd& beta_s,
                                  const Eigen::VectorXd& beta_v, OutcomeForm form,
                                  double noise_std, Rng& rng) {
  if (S.rows() != V.rows() || S.cols() != beta_s.size() || V.cols() != beta_v.size()) {
    throw DataError("generate_outcomes: inconsistent dimensions");
  }
  const int n = static_cast<int>(S.rows());
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) {
    double y = stable_signal(S.row(i).transpose(), beta_s, form) +
               V.row(i).dot(beta_v);
    Y[i] = y + noise_std * rng.normal();
  }
  return Y;
}

SelectionWeight selection_probability(double fS, const Eigen::VectorXd& v_b, double r) {
  if (!(std::abs(r) > 1.0)) {
    throw ConfigError("bias rate must satisfy |r| > 1, got " + numio::format_double(r));
  }
  const double sign_r = r > 0 ? 1.0 : -1.0;
  SelectionWeight w;
  w.d = (Eigen::VectorXd::Constant(v_b.size(), fS) - sign_r * v_b).cwiseAbs();
  // prod_i |r|^(-5 d_i) evaluated in log space.
  w.prob = std::exp(-5.0 * std::log(std::abs(r)) * w.d.sum());
  return w;
}

Dataset generate_environment(const EnvironmentSpec& spec, Rng& rng, bool keep_trace,
                             std::uint64_t candidate_cap) {
  spec.validate();
  const int n = spec.n, p = spec.p, p_s = spec.p_s(), p_v = spec.p_v();
  const int vb = spec.effective_vb_size();

  Dataset ds;
  ds.beta_s = true_coefficients(p_s);
  ds.beta_v = Eigen::VectorXd::Zero(p_v);
  ds.stable_mask.assign(static_cast<std::size_t>(p), false);
  for (int i = 0; i < p_s; ++i) ds.stable_mask[static_cast<std::size_t>(i)] = true;
  ds.spec = spec;
  ds.spec.vb_size = vb;

  if (!spec.r_bias) {
    auto [S, V, Z] = generate_covariates(spec, rng);
    ds.X.resize(n, p);
    ds.X << S, V;
    ds.Y = generate_outcomes(S, V, ds.beta_s, ds.beta_v, spec.outcome_form,
                             spec.noise_std, rng);
    ds.candidates_drawn = static_cast<std::uint64_t>(n);
    if (keep_trace) ds.trace = std::move(Z);
    return ds;
  }

  const double r = *spec.r_bias;
  const double log_factor = -5.0 * std::log(std::abs(r));
  const double sign_r = r > 0 ? 1.0 : -1.0;

  ds.X.resize(n, p);
  ds.Y.resize(n);
  Eigen::MatrixXd Ztrace;
  if (keep_trace) Ztrace.resize(n, p);

  Eigen::VectorXd z_row(p), s_row(p_s), vb_row(vb);
  std::uint64_t drawn = 0;
  int accepted = 0;
  while (accepted < n) {
    if (drawn >= candidate_cap) {
      throw GenerationStallError(
          "rejection sampling stalled after " + std::to_string(drawn) +
          " candidates for spec (n=" + std::to_string(n) + ", p=" + std::to_string(p) +
          ", r_bias=" + numio::format_double(r) + ", vb_size=" + std::to_string(vb) +
          "); accepted " + std::to_string(accepted));
    }
    ++drawn;
    for (int j = 0; j < p; ++j) z_row[j] = rng.normal();
    for (int i = 0; i < p_s; ++i) s_row[i] = 0.8 * z_row[i] + 0.2 * z_row[i + 1];
    for (int j = 0; j < vb; ++j) vb_row[j] = rng.normal();
    double fS = stable_signal(s_row, ds.beta_s, spec.outcome_form);
    double d_sum = (Eigen::VectorXd::Constant(vb, fS) - sign_r * vb_row).cwiseAbs().sum();
    double prob = std::exp(log_factor * d_sum);
    if (rng.uniform01() >= prob) continue;

    // Accepted: complete the sample with the remaining unstable features
    // and the outcome noise (neither affects selection).
    ds.X.row(accepted).head(p_s) = s_row;
    ds.X.row(accepted).segment(p_s, vb) = vb_row;
    for (int j = vb; j < p_v; ++j) ds.X(accepted, p_s + j) = rng.normal();
    ds.Y[accepted] = fS + spec.noise_std * rng.normal();
    if (keep_trace) Ztrace.row(accepted) = z_row;
    ++accepted;
  }
  ds.candidates_drawn = drawn;
  if (keep_trace) ds.trace = std::move(Ztrace);
  return ds;
}

Dataset generate_environment(const EnvironmentSpec& spec, bool keep_trace,
                             std::uint64_t candidate_cap) {
  Rng rng(spec.seed);
  return generate_environment(spec, rng, keep_trace, candidate_cap);
}

void write_dataset(const Dataset& ds, const std::string& data_path,
                   const std::string& meta_path) {
  std::ofstream out(data_path);
  if (!out) throw DataError("cannot open " + data_path + " for writing");
  const int n = ds.n(), p = ds.p();
  for (int j = 0; j < p; ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) out << numio::format_double(ds.X(i, j)) << ',';
    out << numio::format_double(ds.Y[i]) << '\n';
  }
  if (!out.flush()) throw DataError("write failed for " + data_path);

  json meta;
  meta["n"] = n;
  meta["p"] = p;
  meta["p_s"] = ds.spec.p_s();
  meta["p_v"] = ds.spec.p_v();
  meta["outcome_form"] = to_string(ds.spec.outcome_form);
  if (ds.spec.r_bias) {
    meta["r_bias"] = *ds.spec.r_bias;
  } else {
    meta["r_bias"] = nullptr;
  }
  meta["vb_size"] = ds.spec.effective_vb_size();
  meta["noise_std"] = ds.spec.noise_std;
  meta["seed"] = ds.spec.seed;
  meta["beta_s"] = std::vector<double>(ds.beta_s.data(), ds.beta_s.data() + ds.beta_s.size());
  meta["beta_v"] = std::vector<double>(ds.beta_v.data(), ds.beta_v.data() + ds.beta_v.size());
  meta["stable_mask"] = ds.stable_mask;

  std::ofstream mout(meta_path);
  if (!mout) throw DataError("cannot open " + meta_path + " for writing");
  mout << meta.dump(2) << '\n';
  if (!mout.flush()) throw DataError("write failed for " + meta_path);
}

Dataset read_dataset(const std::string& data_path, const std::string& meta_path) {
  std::ifstream min(meta_path);
  if (!min) throw DataError("cannot open " + meta_path);
  json meta;
  try {
    min >> meta;
  } catch (const json::exception& e) {
    throw DataError(meta_path + ": " + e.what());
  }

  Dataset ds;
  try {
    ds.spec.n = meta.at("n").get<int>();
    ds.spec.p = meta.at("p").get<int>();
    ds.spec.outcome_form = outcome_form_from_string(meta.at("outcome_form").get<std::string>());
    if (!meta.at("r_bias").is_null()) ds.spec.r_bias = meta.at("r_bias").get<double>();
    ds.spec.vb_size = meta.at("vb_size").get<int>();
    ds.spec.noise_std = meta.at("noise_std").get<double>();
    ds.spec.seed = meta.at("seed").get<std::uint64_t>();
    auto bs = meta.at("beta_s").get<std::vector<double>>();
    auto bv = meta.at("beta_v").get<std::vector<double>>();
    ds.beta_s = Eigen::Map<Eigen::VectorXd>(bs.data(), static_cast<long>(bs.size()));
    ds.beta_v = Eigen::Map<Eigen::VectorXd>(bv.data(), static_cast<long>(bv.size()));
    ds.stable_mask = meta.at("stable_mask").get<std::vector<bool>>();
    int ps_meta = meta.at("p_s").get<int>();
    int pv_meta = meta.at("p_v").get<int>();
    if (ps_meta != ds.spec.p_s() || pv_meta != ds.spec.p_v()) {
      throw DataError(meta_path + ": p_s/p_v inconsistent with p");
    }
  } catch (const json::exception& e) {
    throw DataError(meta_path + ": " + e.what());
  }
  const int n = ds.spec.n, p = ds.spec.p;
  if (static_cast<int>(ds.stable_mask.size()) != p ||
      ds.beta_s.size() != ds.spec.p_s() || ds.beta_v.size() != ds.spec.p_v()) {
    throw DataError(meta_path + ": ground-truth lengths inconsistent with p");
  }
  for (int j = 0; j < p; ++j) {
    if (ds.stable_mask[static_cast<std::size_t>(j)] != (j < ds.spec.p_s())) {
      throw DataError(meta_path + ": stable_mask must mark exactly the leading p/2 columns");
    }
  }

  std::ifstream in(data_path);
  if (!in) throw DataError("cannot open " + data_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(data_path + ":1: missing header");
  auto header = numio::split_csv_line(line);
  if (static_cast<int>(header.size()) != p + 1) {
    throw DataError(data_path + ":1: expected " + std::to_string(p + 1) +
                    " columns (x1..x" + std::to_string(p) + ",y), got " +
                    std::to_string(header.size()));
  }
  for (int j = 0; j < p; ++j) {
    if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j + 1)) {
      throw DataError(data_path + ":1: column " + std::to_string(j + 1) +
                      " must be x" + std::to_string(j + 1) + ", got '" +
                      header[static_cast<std::size_t>(j)] + "'");
    }
  }
  if (header.back() != "y") {
    throw DataError(data_path + ":1: last column must be y, got '" + header.back() + "'");
  }

  ds.X.resize(n, p);
  ds.Y.resize(n);
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    if (row >= n) throw DataError(data_path + ": more data rows than meta n=" + std::to_string(n));
    auto fields = numio::split_csv_line(line);
    const std::string where_base = data_path + ":" + std::to_string(row + 2);
    if (static_cast<int>(fields.size()) != p + 1) {
      throw DataError(where_base + ": expected " + std::to_string(p + 1) +
                      " fields, got " + std::to_string(fields.size()));
    }
    for (int j = 0; j < p; ++j) {
      ds.X(row, j) = numio::parse_double(fields[static_cast<std::size_t>(j)],
                                         where_base + ": field " + std::to_string(j + 1));
    }
    ds.Y[row] = numio::parse_double(fields.back(),
                                    where_base + ": field " + std::to_string(p + 1));
    ++row;
  }
  if (row != n) {
    throw DataError(data_path + ": meta n=" + std::to_string(n) + " but found " +
                    std::to_string(row) + " data rows");
  }
  return ds;
}

}  // namespace cfr
