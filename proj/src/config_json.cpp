#include "cfr/config_json.hpp"

#include <algorithm>

#include "cfr/errors.hpp"

namespace cfr {

using nlohmann::json;

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string valid;
      for (const auto& a : allowed) valid += (valid.empty() ? "" : ", ") + a;
      throw ConfigError(context + ": unknown key '" + key + "' (valid keys: " + valid + ")");
    }
  }
}

std::string to_string(GradForm g) {
  return g == GradForm::kSum ? "sum" : "mean";
}
GradForm grad_form_from_string(const std::string& s) {
  if (s == "sum") return GradForm::kSum;
  if (s == "mean") return GradForm::kMean;
  throw ConfigError("grad_form must be 'sum' or 'mean', got '" + s + "'");
}

std::string to_string(WUpdateLoss w) {
  return w == WUpdateLoss::kReconstructionOnly ? "reconstruction_only" : "joint";
}
WUpdateLoss w_update_loss_from_string(const std::string& s) {
  if (s == "reconstruction_only") return WUpdateLoss::kReconstructionOnly;
  if (s == "joint") return WUpdateLoss::kJoint;
  throw ConfigError("w_update_loss must be 'reconstruction_only' or 'joint', got '" + s + "'");
}

std::string to_string(InitScheme i) {
  return i == InitScheme::kZeros ? "zeros" : "uniform_small";
}
InitScheme init_scheme_from_string(const std::string& s) {
  if (s == "zeros") return InitScheme::kZeros;
  if (s == "uniform_small") return InitScheme::kUniformSmall;
  throw ConfigError("init must be 'zeros' or 'uniform_small', got '" + s + "'");
}

std::string to_string(ReconNorm n) {
  return n == ReconNorm::kSquaredL2 ? "squared_l2" : "l1";
}
ReconNorm recon_norm_from_string(const std::string& s) {
  if (s == "squared_l2") return ReconNorm::kSquaredL2;
  if (s == "l1") return ReconNorm::kL1;
  throw ConfigError("recon_norm must be 'squared_l2' or 'l1', got '" + s + "'");
}

std::string to_string(Alternation a) {
  return a == Alternation::kPerBatch ? "per_batch" : "per_epoch";
}
Alternation alternation_from_string(const std::string& s) {
  if (s == "per_batch") return Alternation::kPerBatch;
  if (s == "per_epoch") return Alternation::kPerEpoch;
  throw ConfigError("alternation must be 'per_batch' or 'per_epoch', got '" + s + "'");
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T, typename Parse>
void maybe_enum(const json& j, const char* key, T& out, Parse parse) {
  if (j.contains(key) && !j.at(key).is_null()) out = parse(j.at(key).get<std::string>());
}

}  // namespace

json env_spec_to_json(const EnvironmentSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["p"] = spec.p;
  j["outcome_form"] = to_string(spec.outcome_form);
  if (spec.r_bias) {
    j["r_bias"] = *spec.r_bias;
  } else {
    j["r_bias"] = nullptr;
  }
  j["vb_size"] = spec.vb_size;
  j["noise_std"] = spec.noise_std;
  j["seed"] = spec.seed;
  return j;
}

EnvironmentSpec env_spec_from_json(const json& j, const std::string& context) {
  check_keys(j, {"n", "p", "outcome_form", "r_bias", "vb_size", "noise_std", "seed"},
             context);
  EnvironmentSpec spec;
  try {
    maybe(j, "n", spec.n);
    maybe(j, "p", spec.p);
    maybe_enum(j, "outcome_form", spec.outcome_form, outcome_form_from_string);
    if (j.contains("r_bias") && !j.at("r_bias").is_null()) {
      spec.r_bias = j.at("r_bias").get<double>();
    }
    maybe(j, "vb_size", spec.vb_size);
    maybe(j, "noise_std", spec.noise_std);
    maybe(j, "seed", spec.seed);
  } catch (const json::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return spec;
}

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["lr_w"] = cfg.lr_w;
  j["lr_beta"] = cfg.lr_beta;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["w_update_loss"] = to_string(cfg.w_update_loss);
  j["convergence_tol"] = cfg.convergence_tol;
  j["grad_form"] = to_string(cfg.grad_form);
  j["init"] = to_string(cfg.init);
  j["recon_norm"] = to_string(cfg.recon_norm);
  j["alternation"] = to_string(cfg.alternation);
  j["fit_intercept"] = cfg.fit_intercept;
  return j;
}

TrainConfig train_config_from_json(const json& j, const std::string& context) {
  check_keys(j,
             {"lr_w", "lr_beta", "epochs", "batch_size", "seed", "w_update_loss",
              "convergence_tol", "grad_form", "init", "recon_norm", "alternation",
              "fit_intercept"},
             context);
  TrainConfig cfg;
  try {
    maybe(j, "lr_w", cfg.lr_w);
    maybe(j, "lr_beta", cfg.lr_beta);
    maybe(j, "epochs", cfg.epochs);
    maybe(j, "batch_size", cfg.batch_size);
    maybe(j, "seed", cfg.seed);
    maybe_enum(j, "w_update_loss", cfg.w_update_loss, w_update_loss_from_string);
    maybe(j, "convergence_tol", cfg.convergence_tol);
    maybe_enum(j, "grad_form", cfg.grad_form, grad_form_from_string);
    maybe_enum(j, "init", cfg.init, init_scheme_from_string);
    maybe_enum(j, "recon_norm", cfg.recon_norm, recon_norm_from_string);
    maybe_enum(j, "alternation", cfg.alternation, alternation_from_string);
    maybe(j, "fit_intercept", cfg.fit_intercept);
  } catch (const json::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return cfg;
}

json classifier_config_to_json(const ClassifierTrainConfig& cfg) {
  json j;
  j["lr_model"] = cfg.lr_model;
  j["lr_w"] = cfg.lr_w;
  j["epochs"] = cfg.epochs;
  j["lr_decay_epochs"] = cfg.lr_decay_epochs;
  j["lr_decay_factor"] = cfg.lr_decay_factor;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["grad_form"] = to_string(cfg.grad_form);
  return j;
}

ClassifierTrainConfig classifier_config_from_json(const json& j,
                                                  const std::string& context) {
  check_keys(j,
             {"lr_model", "lr_w", "epochs", "lr_decay_epochs", "lr_decay_factor",
              "batch_size", "seed", "grad_form"},
             context);
  ClassifierTrainConfig cfg;
  try {
    maybe(j, "lr_model", cfg.lr_model);
    maybe(j, "lr_w", cfg.lr_w);
    maybe(j, "epochs", cfg.epochs);
    maybe(j, "lr_decay_epochs", cfg.lr_decay_epochs);
    maybe(j, "lr_decay_factor", cfg.lr_decay_factor);
    maybe(j, "batch_size", cfg.batch_size);
    maybe(j, "seed", cfg.seed);
    maybe_enum(j, "grad_form", cfg.grad_form, grad_form_from_string);
  } catch (const json::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return cfg;
}

json dwr_config_to_json(const DwrConfig& cfg) {
  json j;
  j["lr"] = cfg.lr;
  j["iters"] = cfg.iters;
  j["seed"] = cfg.seed;
  return j;
}

DwrConfig dwr_config_from_json(const json& j, const std::string& context) {
  check_keys(j, {"lr", "iters", "seed"}, context);
  DwrConfig cfg;
  try {
    maybe(j, "lr", cfg.lr);
    maybe(j, "iters", cfg.iters);
    maybe(j, "seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return cfg;
}

json method_spec_to_json(const MethodSpec& m) {
  json j;
  j["method"] = to_string(m.method);
  j["lambda"] = m.lambda;
  j["train"] = train_config_to_json(m.train);
  j["dwr"] = dwr_config_to_json(m.dwr);
  return j;
}

MethodSpec method_spec_from_json(const json& j, const std::string& context) {
  check_keys(j, {"method", "lambda", "train", "dwr"}, context);
  MethodSpec m;
  try {
    if (!j.contains("method")) throw ConfigError(context + ": missing 'method'");
    m.method = method_from_string(j.at("method").get<std::string>());
    maybe(j, "lambda", m.lambda);
    if (j.contains("train")) {
      m.train = train_config_from_json(j.at("train"), context + ".train");
    }
    if (j.contains("dwr")) {
      m.dwr = dwr_config_from_json(j.at("dwr"), context + ".dwr");
    }
  } catch (const json::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return m;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["train_spec"] = env_spec_to_json(s.train_spec);
  j["methods"] = json::array();
  for (const auto& m : s.methods) j["methods"].push_back(method_spec_to_json(m));
  j["test_grid"] = s.test_grid;
  j["train_reps"] = s.train_reps;
  j["test_reps_per_env"] = s.test_reps_per_env;
  j["base_seed"] = s.base_seed;
  return j;
}

Scenario scenario_from_json(const json& j, const std::string& context) {
  check_keys(j,
             {"name", "train_spec", "methods", "test_grid", "train_reps",
              "test_reps_per_env", "base_seed"},
             context);
  Scenario s;
  try {
    maybe(j, "name", s.name);
    if (j.contains("train_spec")) {
      s.train_spec = env_spec_from_json(j.at("train_spec"), context + ".train_spec");
    }
    if (j.contains("methods")) {
      s.methods.clear();
      int i = 0;
      for (const auto& mj : j.at("methods")) {
        s.methods.push_back(
            method_spec_from_json(mj, context + ".methods[" + std::to_string(i) + "]"));
        ++i;
      }
    }
    maybe(j, "test_grid", s.test_grid);
    maybe(j, "train_reps", s.train_reps);
    maybe(j, "test_reps_per_env", s.test_reps_per_env);
    maybe(j, "base_seed", s.base_seed);
  } catch (const json::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return s;
}

}  // namespace cfr
