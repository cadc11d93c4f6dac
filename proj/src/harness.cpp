#include "cfr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "cfr/errors.hpp"
#include "cfr/numio.hpp"

namespace cfr {

std::vector<double> default_test_grid() {
  return {-3.0, -2.5, -2.0, -1.7, -1.5, -1.3, 1.3, 1.5, 1.7, 2.0, 2.5, 3.0};
}

void Scenario::validate() const {
  if (name.empty()) throw ConfigError("scenario name must not be empty");
  if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos) {
    throw ConfigError("scenario name must not contain commas or newlines");
  }
  train_spec.validate();
  if (methods.empty()) throw ConfigError("scenario needs at least one method");
  for (double r : test_grid) {
    double a = std::abs(r);
    if (!(a > 1.0) || !(a <= 3.0)) {
      throw ConfigError("test_grid value " + numio::format_double(r) +
                        " outside [-3,-1) U (1,3]");
    }
  }
  if (train_reps < 1) throw ConfigError("train_reps must be >= 1");
  if (test_reps_per_env < 1) throw ConfigError("test_reps_per_env must be >= 1");
}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& X) const {
  // Every method deploys as a plain linear model. The rectified pathway only
  // shapes the coefficients during training; carrying its weight matrix to a
  // shifted environment would import the training environment's correlation
  // structure, which is exactly what evaluation must not assume.
  Eigen::VectorXd pred = X * beta;
  if (cfr && cfr->intercept != 0.0) pred.array() += cfr->intercept;
  return pred;
}

std::uint64_t spec_content_key(const EnvironmentSpec& spec) {
  std::uint64_t k = seed_mix(0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(spec.n));
  k = seed_mix(k, static_cast<std::uint64_t>(spec.p));
  k = seed_mix(k, to_string(spec.outcome_form));
  k = seed_mix(k, spec.r_bias ? *spec.r_bias : std::nan(""));
  k = seed_mix(k, static_cast<std::uint64_t>(spec.effective_vb_size()));
  k = seed_mix(k, spec.noise_std);
  return k;
}

std::uint64_t train_data_seed(std::uint64_t base_seed, const EnvironmentSpec& spec,
                              int rep) {
  std::uint64_t k = seed_mix(base_seed, spec_content_key(spec));
  return seed_mix(seed_mix(k, "train-data"), static_cast<std::uint64_t>(rep));
}

namespace {

std::uint64_t eval_base_seed(std::uint64_t base_seed, const EnvironmentSpec& spec,
                             int rep) {
  std::uint64_t k = seed_mix(base_seed, spec_content_key(spec));
  return seed_mix(seed_mix(k, "eval"), static_cast<std::uint64_t>(rep));
}

std::uint64_t test_data_seed(std::uint64_t eval_base, double r_test, int test_rep) {
  return seed_mix(seed_mix(seed_mix(eval_base, "test-data"), r_test),
                  static_cast<std::uint64_t>(test_rep));
}

std::uint64_t method_stream_seed(std::uint64_t data_seed, const std::string& label) {
  return seed_mix(seed_mix(data_seed, "method-stream"), label);
}

std::vector<int> all_indices(int p) {
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<int> unstable_indices(const Dataset& ds) {
  std::vector<int> idx;
  for (int j = 0; j < ds.p(); ++j) {
    if (!ds.stable_mask[static_cast<std::size_t>(j)]) idx.push_back(j);
  }
  return idx;
}

// Rethrows the current module errors with the failing cell named, keeping
// the error type (and thus the CLI exit code) intact.
template <typename Fn>
auto with_cell_context(const std::string& ctx, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + ": " + e.what());
  } catch (const GenerationStallError& e) {
    throw GenerationStallError(ctx + ": " + e.what());
  } catch (const DivergenceError& e) {
    throw DivergenceError(ctx + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + ": " + e.what());
  }
}

}  // namespace

FittedModel fit_method(const Dataset& ds, const MethodSpec& m, std::uint64_t train_seed) {
  FittedModel out;
  out.label = m.label();
  switch (m.method) {
    case Method::kOls:
      out.beta = ols_fit(ds.X, ds.Y).beta;
      break;
    case Method::kRidge:
      out.beta = ridge_fit(ds.X, ds.Y, m.lambda).beta;
      break;
    case Method::kLasso:
      out.beta = lasso_fit(ds.X, ds.Y, m.lambda).beta;
      break;
    case Method::kDwr:
      out.beta = dwr_fit(ds.X, ds.Y, m.dwr).first.beta;
      break;
    case Method::kCfr: {
      TrainConfig cfg = m.train;
      cfg.seed = train_seed;
      out.cfr = train_cfr(ds, cfg);
      out.beta = out.cfr->beta;
      break;
    }
  }
  return out;
}

SingleResult run_single(const EnvironmentSpec& train_spec, const MethodSpec& m,
                        std::uint64_t seed) {
  EnvironmentSpec spec = train_spec;
  spec.seed = seed;
  Dataset ds = generate_environment(spec);
  SingleResult res;
  res.model = fit_method(ds, m, method_stream_seed(seed, m.label()));
  res.beta_error = beta_error(res.model.beta, ds.beta_full(), all_indices(ds.p()));
  res.beta_v_error = beta_error(res.model.beta, ds.beta_full(), unstable_indices(ds));
  return res;
}

std::vector<EnvResult> evaluate_across_envs(const FittedModel& model,
                                            const std::vector<double>& test_grid,
                                            const EnvironmentSpec& spec_template,
                                            int reps, std::uint64_t base_seed) {
  if (reps < 1) throw ConfigError("evaluate_across_envs: reps must be >= 1");
  std::vector<EnvResult> results;
  results.reserve(test_grid.size());
  for (double r_test : test_grid) {
    EnvResult env;
    env.r_test = r_test;
    for (int rep = 0; rep < reps; ++rep) {
      EnvironmentSpec spec = spec_template;
      spec.r_bias = r_test;
      spec.seed = test_data_seed(base_seed, r_test, rep);
      Dataset ds = generate_environment(spec);
      env.rmse_values.push_back(rmse(model.predict(ds.X), ds.Y));
    }
    results.push_back(std::move(env));
  }
  return results;
}

void sort_records(std::vector<RunRecord>& records) {
  auto key = [](const RunRecord& r) {
    // Training rows (no r_test) sort before evaluation rows.
    return std::make_tuple(r.scenario, r.method, r.rep, r.r_test.has_value(),
                           r.r_test.value_or(0.0));
  };
  std::stable_sort(records.begin(), records.end(),
                   [&](const RunRecord& a, const RunRecord& b) { return key(a) < key(b); });
}

ScenarioResult run_scenario(const Scenario& s, int threads) {
  s.validate();
  ScenarioResult result;
  result.scenario = s;

  std::vector<std::vector<RunRecord>> per_rep(static_cast<std::size_t>(s.train_reps));
  parallel_for(s.train_reps, threads, [&](int rep) {
    const std::string ctx = "scenario " + s.name + ", rep " + std::to_string(rep);
    const std::uint64_t dseed = train_data_seed(s.base_seed, s.train_spec, rep);

    EnvironmentSpec tspec = s.train_spec;
    tspec.seed = dseed;
    Dataset ds = with_cell_context(ctx + ", training data",
                                   [&] { return generate_environment(tspec); });

    std::vector<RunRecord> recs;
    std::vector<FittedModel> fitted;
    std::vector<std::pair<double, double>> errors;  // (beta_error, beta_v_error)
    for (const MethodSpec& m : s.methods) {
      FittedModel fm = with_cell_context(ctx + ", method " + m.label(), [&] {
        return fit_method(ds, m, method_stream_seed(dseed, m.label()));
      });
      double be = beta_error(fm.beta, ds.beta_full(), all_indices(ds.p()));
      double bve = beta_error(fm.beta, ds.beta_full(), unstable_indices(ds));
      RunRecord rec;
      rec.scenario = s.name;
      rec.method = fm.label;
      rec.n = s.train_spec.n;
      rec.p = s.train_spec.p;
      rec.r_train = s.train_spec.r_bias;
      rec.rep = rep;
      rec.seed = dseed;
      rec.beta_error = be;
      rec.beta_v_error = bve;
      recs.push_back(rec);
      fitted.push_back(std::move(fm));
      errors.emplace_back(be, bve);
    }

    // Every method sees the same test datasets for this rep.
    const std::uint64_t ebase = eval_base_seed(s.base_seed, s.train_spec, rep);
    for (double r_test : s.test_grid) {
      std::vector<double> rmse_sums(s.methods.size(), 0.0);
      for (int trep = 0; trep < s.test_reps_per_env; ++trep) {
        EnvironmentSpec espec = s.train_spec;
        espec.r_bias = r_test;
        espec.seed = test_data_seed(ebase, r_test, trep);
        Dataset eds = with_cell_context(
            ctx + ", test env r=" + numio::format_double(r_test) + ", test rep " +
                std::to_string(trep),
            [&] { return generate_environment(espec); });
        for (std::size_t mi = 0; mi < fitted.size(); ++mi) {
          rmse_sums[mi] += rmse(fitted[mi].predict(eds.X), eds.Y);
        }
      }
      for (std::size_t mi = 0; mi < fitted.size(); ++mi) {
        RunRecord rec;
        rec.scenario = s.name;
        rec.method = fitted[mi].label;
        rec.n = s.train_spec.n;
        rec.p = s.train_spec.p;
        rec.r_train = s.train_spec.r_bias;
        rec.r_test = r_test;
        rec.rep = rep;
        rec.seed = dseed;
        rec.rmse = rmse_sums[mi] / static_cast<double>(s.test_reps_per_env);
        rec.beta_error = errors[mi].first;
        rec.beta_v_error = errors[mi].second;
        recs.push_back(rec);
      }
    }
    per_rep[static_cast<std::size_t>(rep)] = std::move(recs);
  });

  for (auto& recs : per_rep) {
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  }
  sort_records(result.records);
  result.by_method = aggregate_records(result.records)[s.name];
  return result;
}

std::map<std::string, std::map<std::string, StabilityReport>> aggregate_records(
    const std::vector<RunRecord>& records) {
  struct Bucket {
    std::vector<double> train_be, train_bve;
    std::map<double, std::vector<double>> env_rmses;
  };
  std::map<std::string, std::map<std::string, Bucket>> buckets;
  for (const RunRecord& r : records) {
    Bucket& b = buckets[r.scenario][r.method];
    if (r.r_test) {
      if (r.rmse) b.env_rmses[*r.r_test].push_back(*r.rmse);
    } else {
      b.train_be.push_back(r.beta_error);
      b.train_bve.push_back(r.beta_v_error);
    }
  }

  auto mean_of = [](const std::vector<double>& v) {
    return v.empty() ? 0.0
                     : std::accumulate(v.begin(), v.end(), 0.0) /
                           static_cast<double>(v.size());
  };
  auto sample_var = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v), ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / (static_cast<double>(v.size()) - 1.0);
  };

  std::map<std::string, std::map<std::string, StabilityReport>> out;
  for (auto& [scen, methods] : buckets) {
    for (auto& [method, b] : methods) {
      StabilityReport rep;
      rep.beta_error_mean = mean_of(b.train_be);
      rep.beta_v_error_mean = mean_of(b.train_bve);
      rep.beta_v_error_var = sample_var(b.train_bve);
      std::vector<EnvResult> envs;
      for (auto& [r_test, values] : b.env_rmses) {
        rep.per_env.emplace_back(r_test, mean_of(values));
        envs.push_back(EnvResult{r_test, values});
      }
      if (envs.size() >= 2) {
        auto [ae, se] = ae_se(envs);
        rep.ae = ae;
        rep.se = se;
      }
      out[scen][method] = std::move(rep);
    }
  }
  return out;
}

TrainConfig table1_cfr_train_config() {
  // Frozen by the acceptance suite. Full-batch mean-form training with a
  // fixed epoch budget: long enough for the stable coefficients to converge,
  // short enough that the unstable ones have not yet absorbed the spurious
  // correlation (at full convergence the fit drifts back toward the plain
  // least-squares solution pushed through the rectifier).
  TrainConfig cfg;
  cfg.lr_w = 0.005;
  cfg.lr_beta = 0.05;
  cfg.epochs = 600;
  cfg.batch_size = 0;
  cfg.grad_form = GradForm::kMean;
  cfg.w_update_loss = WUpdateLoss::kReconstructionOnly;
  cfg.convergence_tol = 0.0;
  return cfg;
}

double table1_lambda(int n) { return 0.01 * static_cast<double>(n); }

std::vector<Scenario> table1_scenarios(const std::string& group, int train_reps,
                                       int test_reps_per_env, std::uint64_t base_seed) {
  auto make = [&](const std::string& name, int n, int p, double r) {
    Scenario s;
    s.name = name;
    s.train_spec.n = n;
    s.train_spec.p = p;
    s.train_spec.outcome_form = OutcomeForm::kPoly;
    s.train_spec.r_bias = r;
    s.train_spec.noise_std = 0.3;
    s.train_reps = train_reps;
    s.test_reps_per_env = test_reps_per_env;
    s.base_seed = base_seed;
    for (Method m : {Method::kOls, Method::kRidge, Method::kLasso, Method::kDwr,
                     Method::kCfr}) {
      MethodSpec ms;
      ms.method = m;
      ms.lambda = table1_lambda(n);
      ms.train = table1_cfr_train_config();
      s.methods.push_back(ms);
    }
    return s;
  };

  std::vector<Scenario> out;
  if (group == "s1" || group == "all") {
    for (int n : {1000, 2000, 4000}) {
      out.push_back(make("table1-s1-n" + std::to_string(n), n, 10, 1.7));
    }
  }
  if (group == "s2" || group == "all") {
    for (int p : {10, 20, 40}) {
      out.push_back(make("table1-s2-p" + std::to_string(p), 2000, p, 1.7));
    }
  }
  if (group == "s3" || group == "all") {
    for (double r : {1.5, 1.7, 2.0}) {
      out.push_back(make("table1-s3-r" + numio::format_double(r), 2000, 20, r));
    }
  }
  if (out.empty()) {
    throw ConfigError("unknown scenario group '" + group + "'; valid: s1, s2, s3, all");
  }
  return out;
}

const char* kCsvHeader = "scenario,method,n,p,r_train,r_test,rep,seed,rmse,beta_error,beta_v_error";

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const RunRecord& r : records) {
    out << r.scenario << ',' << r.method << ',' << r.n << ',' << r.p << ',';
    if (r.r_train) out << numio::format_double(*r.r_train);
    out << ',';
    if (r.r_test) out << numio::format_double(*r.r_test);
    out << ',' << r.rep << ',' << r.seed << ',';
    if (r.rmse) out << numio::format_double(*r.rmse);
    out << ',' << numio::format_double(r.beta_error) << ','
        << numio::format_double(r.beta_v_error) << '\n';
  }
  return out.str();
}

void write_records_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << records_to_csv(records);
  if (!out.flush()) throw DataError("write failed for " + path);
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ":1: missing header");
  {
    auto fields = numio::split_csv_line(line);
    auto expect = numio::split_csv_line(kCsvHeader);
    if (fields != expect) {
      throw DataError(path + ":1: header must be exactly '" + kCsvHeader + "'");
    }
  }
  std::vector<RunRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.eof()) break;
    auto f = numio::split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 11) {
      throw DataError(where + ": expected 11 fields, got " + std::to_string(f.size()));
    }
    RunRecord r;
    r.scenario = f[0];
    r.method = f[1];
    r.n = static_cast<int>(numio::parse_int(f[2], where + " (n)"));
    r.p = static_cast<int>(numio::parse_int(f[3], where + " (p)"));
    if (!f[4].empty()) r.r_train = numio::parse_double(f[4], where + " (r_train)");
    if (!f[5].empty()) r.r_test = numio::parse_double(f[5], where + " (r_test)");
    r.rep = static_cast<int>(numio::parse_int(f[6], where + " (rep)"));
    {
      std::uint64_t seed = 0;
      auto [ptr, ec] = std::from_chars(f[7].data(), f[7].data() + f[7].size(), seed);
      if (ec != std::errc() || ptr != f[7].data() + f[7].size()) {
        throw DataError(where + " (seed): expected unsigned integer, got '" + f[7] + "'");
      }
      r.seed = seed;
    }
    if (!f[8].empty()) r.rmse = numio::parse_double(f[8], where + " (rmse)");
    r.beta_error = numio::parse_double(f[9], where + " (beta_error)");
    r.beta_v_error = numio::parse_double(f[10], where + " (beta_v_error)");
    records.push_back(std::move(r));
  }
  return records;
}

void parallel_for(int jobs, int threads, const std::function<void(int)>& fn) {
  if (jobs <= 0) return;
  threads = std::min(threads, jobs);
  if (threads <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace cfr
