#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfr/classifier.hpp"
#include "cfr/config_json.hpp"
#include "cfr/datagen.hpp"
#include "cfr/errors.hpp"
#include "cfr/harness.hpp"
#include "cfr/metrics.hpp"
#include "cfr/model_io.hpp"
#include "cfr/numio.hpp"
#include "cfr/regressors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cfr::ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw cfr::ConfigError(path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw cfr::DataError("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) throw cfr::DataError("write failed for " + path);
}

std::string default_meta_path(const std::string& data_path) {
  if (data_path.size() > 4 && data_path.substr(data_path.size() - 4) == ".csv") {
    return data_path.substr(0, data_path.size() - 4) + ".meta.json";
  }
  return data_path + ".meta.json";
}

json report_json_from_records(const std::vector<cfr::RunRecord>& records) {
  json report = json::object();
  for (const auto& [scenario, methods] : cfr::aggregate_records(records)) {
    json sj = json::object();
    for (const auto& [method, rep] : methods) {
      json mj;
      mj["beta_v_error_mean"] = rep.beta_v_error_mean;
      mj["beta_v_error_var"] = rep.beta_v_error_var;
      mj["ae"] = rep.ae;
      mj["se"] = rep.se;
      json envs = json::array();
      for (const auto& [r_test, mean_rmse] : rep.per_env) {
        envs.push_back({{"r_test", r_test}, {"mean_rmse", mean_rmse}});
      }
      mj["per_env"] = std::move(envs);
      sj[method] = std::move(mj);
    }
    report[scenario] = std::move(sj);
  }
  return report;
}

void print_sweep_summary(const std::vector<cfr::RunRecord>& records) {
  auto agg = cfr::aggregate_records(records);
  for (const auto& [scenario, methods] : agg) {
    std::string best_bve, best_se;
    double min_bve = 0, min_se = 0;
    for (const auto& [method, rep] : methods) {
      if (best_bve.empty() || rep.beta_v_error_mean < min_bve) {
        best_bve = method;
        min_bve = rep.beta_v_error_mean;
      }
      if (best_se.empty() || rep.se < min_se) {
        best_se = method;
        min_se = rep.se;
      }
    }
    std::cout << scenario << ":\n";
    for (const auto& [method, rep] : methods) {
      std::cout << "  " << method << ": beta_v_error="
                << cfr::numio::format_double(rep.beta_v_error_mean)
                << (method == best_bve ? "*" : "")
                << " ae=" << cfr::numio::format_double(rep.ae)
                << " se=" << cfr::numio::format_double(rep.se)
                << (method == best_se ? "*" : "") << "\n";
    }
  }
  std::cout << "(* = lowest beta_v_error / lowest se in its configuration)\n";
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags, const std::string& out_meaning,
                const std::string& out_default) {
  flags.out = out_default;
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--seed", flags.seed, "Override the config seed");
  cmd->add_option("--threads", flags.threads, "Worker threads (never affects numbers)")
      ->capture_default_str();
  cmd->add_option("--out", flags.out, out_meaning)->capture_default_str();
}

int cmd_gen(const CommonFlags& flags, const std::string& data_out,
            const std::string& meta_out) {
  cfr::EnvironmentSpec spec;
  if (!flags.config_path.empty()) {
    spec = cfr::env_spec_from_json(load_json_file(flags.config_path), flags.config_path);
  }
  if (flags.seed) spec.seed = *flags.seed;
  spec.validate();

  cfr::Dataset ds = cfr::generate_environment(spec);
  std::string dpath = data_out.empty() ? flags.out + ".csv" : data_out;
  std::string mpath = meta_out.empty() ? flags.out + ".meta.json" : meta_out;
  cfr::write_dataset(ds, dpath, mpath);
  std::cout << "accepted " << ds.n() << " samples from " << ds.candidates_drawn
            << " candidates\n"
            << "wrote " << dpath << " and " << mpath << "\n";
  return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& method,
              const std::string& data_path, const std::string& meta_path,
              double lambda_flag, bool lambda_given) {
  json cfg_json = flags.config_path.empty() ? json::object()
                                            : load_json_file(flags.config_path);

  if (method == "cfr-classifier" || method == "linear-classifier") {
    auto cfg = cfr::classifier_config_from_json(cfg_json, "classifier train config");
    if (flags.seed) cfg.seed = *flags.seed;
    auto [F, labels] = cfr::read_embeddings(data_path);
    if (method == "cfr-classifier") {
      cfr::CfrClassifier clf = cfr::train_cfr_classifier(F, labels, cfg);
      cfr::save_classifier_model(flags.out, clf, cfr::classifier_config_to_json(cfg));
      std::cout << "final cross-entropy: "
                << cfr::numio::format_double(clf.history.back()) << "\n";
    } else {
      cfr::LinearClassifier clf = cfr::train_linear_classifier(F, labels, cfg);
      // Stored in the same classifier layout with a zero rectifier.
      cfr::CfrClassifier as_cfr;
      as_cfr.z_weights = clf.z_weights;
      as_cfr.class_bias = clf.class_bias;
      as_cfr.C = clf.C;
      as_cfr.weights =
          cfr::RectifierWeights{Eigen::MatrixXd::Zero(F.cols(), F.cols())};
      as_cfr.history = clf.history;
      cfr::save_classifier_model(flags.out, as_cfr, cfr::classifier_config_to_json(cfg));
      std::cout << "final cross-entropy: "
                << cfr::numio::format_double(clf.history.back()) << "\n";
    }
    std::cout << "wrote " << flags.out << "\n";
    return 0;
  }

  cfr::Method m = cfr::method_from_string(method);
  std::string mpath = meta_path.empty() ? default_meta_path(data_path) : meta_path;
  cfr::Dataset ds = cfr::read_dataset(data_path, mpath);

  std::optional<cfr::RectifierWeights> w;
  std::optional<double> intercept;
  Eigen::VectorXd beta;
  std::vector<cfr::EpochLosses> history;
  json stored_cfg = json::object();

  switch (m) {
    case cfr::Method::kOls: {
      if (!cfg_json.empty()) cfr::check_keys(cfg_json, {}, "ols train config");
      beta = cfr::ols_fit(ds.X, ds.Y).beta;
      break;
    }
    case cfr::Method::kRidge:
    case cfr::Method::kLasso: {
      cfr::check_keys(cfg_json, {"lambda"}, "train config");
      double lambda = cfg_json.value("lambda", 0.1);
      if (lambda_given) lambda = lambda_flag;
      beta = (m == cfr::Method::kRidge ? cfr::ridge_fit(ds.X, ds.Y, lambda)
                                       : cfr::lasso_fit(ds.X, ds.Y, lambda))
                 .beta;
      stored_cfg["lambda"] = lambda;
      break;
    }
    case cfr::Method::kDwr: {
      auto cfg = cfr::dwr_config_from_json(cfg_json, "dwr train config");
      beta = cfr::dwr_fit(ds.X, ds.Y, cfg).first.beta;
      stored_cfg = cfr::dwr_config_to_json(cfg);
      break;
    }
    case cfr::Method::kCfr: {
      auto cfg = cfr::train_config_from_json(cfg_json, "cfr train config");
      if (flags.seed) cfg.seed = *flags.seed;
      cfr::CfrModel model = cfr::train_cfr(ds, cfg);
      beta = model.beta;
      w = model.weights;
      if (cfg.fit_intercept) intercept = model.intercept;
      history = model.history;
      stored_cfg = cfr::train_config_to_json(cfg);
      std::cout << "final losses: reconstruction="
                << cfr::numio::format_double(model.history.back().l_r)
                << " regression=" << cfr::numio::format_double(model.history.back().l_cfr)
                << "\n";
      break;
    }
  }

  cfr::save_regression_model(flags.out, cfr::to_string(m), beta, w, intercept,
                             stored_cfg, history);

  std::vector<int> all(ds.p()), vs;
  std::iota(all.begin(), all.end(), 0);
  for (int j = 0; j < ds.p(); ++j) {
    if (!ds.stable_mask[static_cast<std::size_t>(j)]) vs.push_back(j);
  }
  std::cout << "beta_error: "
            << cfr::numio::format_double(cfr::beta_error(beta, ds.beta_full(), all))
            << "  beta_v_error: "
            << cfr::numio::format_double(cfr::beta_error(beta, ds.beta_full(), vs))
            << "\n"
            << "wrote " << flags.out << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& model_path,
             const std::string& data_path, const std::string& meta_path) {
  cfr::SavedModel model = cfr::load_model(model_path);
  json out;
  out["rmse"] = nullptr;
  out["beta_error"] = nullptr;
  out["beta_v_error"] = nullptr;
  out["accuracy"] = nullptr;

  if (model.is_classifier) {
    auto [F, labels] = cfr::read_embeddings(data_path);
    if (F.cols() != model.p) {
      throw cfr::DataError("model expects " + std::to_string(model.p) +
                           " features, data has " + std::to_string(F.cols()));
    }
    cfr::CfrClassifier clf;
    clf.z_weights = model.z_weights;
    clf.class_bias = model.class_bias;
    clf.weights = *model.w;
    clf.C = model.C;
    std::vector<int> pred = cfr::predict_labels(F, clf);
    out["accuracy"] = cfr::accuracy(pred, labels);
  } else {
    std::string mpath = meta_path.empty() ? default_meta_path(data_path) : meta_path;
    cfr::Dataset ds = cfr::read_dataset(data_path, mpath);
    Eigen::VectorXd pred = model.predict(ds.X);
    out["rmse"] = cfr::rmse(pred, ds.Y);
    std::vector<int> all(ds.p()), vs;
    std::iota(all.begin(), all.end(), 0);
    for (int j = 0; j < ds.p(); ++j) {
      if (!ds.stable_mask[static_cast<std::size_t>(j)]) vs.push_back(j);
    }
    out["beta_error"] = cfr::beta_error(model.beta, ds.beta_full(), all);
    out["beta_v_error"] = cfr::beta_error(model.beta, ds.beta_full(), vs);
  }

  std::string text = out.dump(2) + "\n";
  if (!flags.out.empty()) {
    write_text_file(flags.out, text);
    std::cout << "wrote " << flags.out << "\n";
  }
  std::cout << text;
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& scenario_name, int reps,
              int test_reps) {
  std::vector<cfr::Scenario> scenarios;
  if (!scenario_name.empty() && !flags.config_path.empty()) {
    throw cfr::ConfigError("pass either --scenario or --config, not both");
  }
  if (!scenario_name.empty()) {
    std::string group;
    if (scenario_name == "table1") {
      group = "all";
    } else if (scenario_name.rfind("table1-", 0) == 0) {
      group = scenario_name.substr(7);
    } else {
      throw cfr::ConfigError("unknown scenario '" + scenario_name +
                             "'; valid: table1, table1-s1, table1-s2, table1-s3");
    }
    scenarios = cfr::table1_scenarios(group, reps > 0 ? reps : 50,
                                      test_reps > 0 ? test_reps : 50,
                                      flags.seed.value_or(47));
  } else if (!flags.config_path.empty()) {
    cfr::Scenario s =
        cfr::scenario_from_json(load_json_file(flags.config_path), flags.config_path);
    if (reps > 0) s.train_reps = reps;
    if (test_reps > 0) s.test_reps_per_env = test_reps;
    if (flags.seed) s.base_seed = *flags.seed;
    scenarios.push_back(std::move(s));
  } else {
    throw cfr::ConfigError("sweep needs --scenario <name> or --config <scenario.json>");
  }

  std::vector<cfr::RunRecord> records;
  for (const auto& s : scenarios) {
    cfr::ScenarioResult res = cfr::run_scenario(s, flags.threads);
    records.insert(records.end(), res.records.begin(), res.records.end());
  }
  cfr::sort_records(records);

  fs::create_directories(flags.out);
  std::string csv_path = (fs::path(flags.out) / "results.csv").string();
  std::string report_path = (fs::path(flags.out) / "report.json").string();
  cfr::write_records_csv(records, csv_path);
  write_text_file(report_path, report_json_from_records(records).dump(2) + "\n");

  print_sweep_summary(records);
  std::cout << "wrote " << csv_path << " and " << report_path << "\n";
  return 0;
}

int cmd_report(const CommonFlags& flags, const std::string& results_path) {
  std::vector<cfr::RunRecord> records = cfr::read_records_csv(results_path);
  auto agg = cfr::aggregate_records(records);
  fs::create_directories(flags.out);

  for (const auto& [scenario, methods] : agg) {
    // Stability curves: RMSE versus test bias rate, one row per point.
    std::string curves = "r_test,method,mean_rmse\n";
    for (const auto& [method, rep] : methods) {
      for (const auto& [r_test, mean_rmse] : rep.per_env) {
        curves += cfr::numio::format_double(r_test) + "," + method + "," +
                  cfr::numio::format_double(mean_rmse) + "\n";
      }
    }
    write_text_file((fs::path(flags.out) / ("curves_" + scenario + ".csv")).string(),
                    curves);

    // Coefficient-error bars.
    std::string bars = "method,beta_v_error_mean,beta_v_error_var\n";
    for (const auto& [method, rep] : methods) {
      bars += method + "," + cfr::numio::format_double(rep.beta_v_error_mean) + "," +
              cfr::numio::format_double(rep.beta_v_error_var) + "\n";
    }
    write_text_file(
        (fs::path(flags.out) / ("beta_errors_" + scenario + ".csv")).string(), bars);
  }

  write_text_file((fs::path(flags.out) / "report.json").string(),
                  report_json_from_records(records).dump(2) + "\n");
  std::cout << "wrote plot data for " << agg.size() << " scenario(s) to " << flags.out
            << "\n";
  return 0;
}

int cmd_defaults() {
  json j;
  j["environment"] = cfr::env_spec_to_json(cfr::EnvironmentSpec{});
  j["environment"]["vb_size_note"] =
      "-1 means max(1, floor(0.1*p)), capped at p/2";
  j["train"] = cfr::train_config_to_json(cfr::TrainConfig{});
  j["classifier_train"] = cfr::classifier_config_to_json(cfr::ClassifierTrainConfig{});
  j["dwr"] = cfr::dwr_config_to_json(cfr::DwrConfig{});
  cfr::Scenario s;
  j["scenario"] = {{"test_grid", s.test_grid},
                   {"train_reps", s.train_reps},
                   {"test_reps_per_env", s.test_reps_per_env},
                   {"base_seed", s.base_seed}};
  j["reference_sweep"] = {{"cfr_train", cfr::train_config_to_json(
                                            cfr::table1_cfr_train_config())},
                          {"lambda_rule", "0.01*n for ridge and lasso"}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable-learning toolkit: biased synthetic environments, a "
               "feature-rectified linear learner, baselines, and a sweep harness"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags, sweep_flags, report_flags;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (CSV + meta JSON)");
  std::string gen_data_out, gen_meta_out;
  add_common(gen, gen_flags, "Output path prefix", "dataset");
  gen->add_option("--data-out", gen_data_out, "Explicit data CSV path");
  gen->add_option("--meta-out", gen_meta_out, "Explicit meta JSON path");

  auto* train = app.add_subcommand("train", "Fit a model to a dataset and save it");
  std::string train_method, train_data, train_meta;
  double train_lambda = 0.1;
  add_common(train, train_flags, "Output model JSON path", "model.json");
  train->add_option("--method", train_method,
                    "ols | ridge | lasso | dwr-like | cfr | cfr-classifier | "
                    "linear-classifier")
      ->required();
  train->add_option("--data", train_data, "Dataset CSV (or embeddings CSV)")->required();
  train->add_option("--meta", train_meta,
                    "Dataset meta JSON (default: derived from --data)");
  auto* lambda_opt =
      train->add_option("--lambda", train_lambda, "Regularization for ridge/lasso");

  auto* eval = app.add_subcommand("eval", "Score a saved model on a dataset");
  std::string eval_model, eval_data, eval_meta;
  add_common(eval, eval_flags, "Output metrics JSON path", "metrics.json");
  eval->add_option("--model", eval_model, "Model JSON path")->required();
  eval->add_option("--data", eval_data, "Dataset CSV (or embeddings CSV)")->required();
  eval->add_option("--meta", eval_meta, "Dataset meta JSON (default: derived from --data)");

  auto* sweep = app.add_subcommand(
      "sweep", "Run a full scenario: repeated training plus cross-environment evaluation");
  std::string sweep_scenario;
  int sweep_reps = 0, sweep_test_reps = 0;
  add_common(sweep, sweep_flags, "Output directory", ".");
  sweep->add_option("--scenario", sweep_scenario,
                    "Named sweep: table1, table1-s1, table1-s2, table1-s3");
  sweep->add_option("--reps", sweep_reps, "Override training repetitions");
  sweep->add_option("--test-reps", sweep_test_reps,
                    "Override test repetitions per environment");

  auto* report = app.add_subcommand("report", "Project a results CSV into plot-ready data");
  std::string report_results;
  add_common(report, report_flags, "Output directory", ".");
  report->add_option("--results", report_results, "results.csv from sweep")->required();

  auto* defaults = app.add_subcommand("defaults", "Print every configurable default");
  (void)defaults;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_flags, gen_data_out, gen_meta_out);
    if (train->parsed()) {
      return cmd_train(train_flags, train_method, train_data, train_meta, train_lambda,
                       lambda_opt->count() > 0);
    }
    if (eval->parsed()) return cmd_eval(eval_flags, eval_model, eval_data, eval_meta);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_flags, sweep_scenario, sweep_reps, sweep_test_reps);
    }
    if (report->parsed()) return cmd_report(report_flags, report_results);
    if (defaults->parsed()) return cmd_defaults();
  } catch (const cfr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cfr::GenerationStallError& e) {
    std::cerr << "generation stalled: " << e.what() << "\n";
    return 3;
  } catch (const cfr::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 4;
  } catch (const cfr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
