#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string g_binary;
fs::path g_dir;

struct CmdResult {
  int code = -1;
  std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
  std::string cmd = "cd '" + g_dir.string() + "' && '" + g_binary + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  char buf[4096];
  while (size_t got = fread(buf, 1, sizeof buf, pipe)) res.output.append(buf, got);
  int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_cli("--help").code == 0);
  CmdResult th = run_cli("train --help");
  CHECK(th.code == 0);
  CHECK(th.output.find("--method") != std::string::npos);
  CHECK(th.output.find("--lambda") != std::string::npos);

  CHECK(run_cli("").code == 2);                 // subcommand required
  CHECK(run_cli("explode").code == 2);          // unknown subcommand
  CHECK(run_cli("train --data x.csv").code == 2);  // missing required --method
}

TEST_CASE("defaults command prints the configuration surface") {
  CmdResult res = run_cli("defaults");
  CHECK(res.code == 0);
  CHECK(res.output.find("lr_w") != std::string::npos);
  CHECK(res.output.find("lr_decay_epochs") != std::string::npos);
  CHECK(res.output.find("noise_std") != std::string::npos);
}

TEST_CASE("gen: valid config, determinism, validation failures") {
  spit(g_dir / "env.json",
       R"({"n": 200, "p": 6, "outcome_form": "poly", "r_bias": 1.7, "seed": 5})");

  CmdResult a = run_cli("gen --config env.json --out ds_a");
  CHECK(a.code == 0);
  CHECK(a.output.find("accepted 200 samples") != std::string::npos);
  CHECK(fs::exists(g_dir / "ds_a.csv"));
  CHECK(fs::exists(g_dir / "ds_a.meta.json"));

  CmdResult b = run_cli("gen --config env.json --out ds_b");
  CHECK(b.code == 0);
  CHECK(slurp(g_dir / "ds_a.csv") == slurp(g_dir / "ds_b.csv"));
  CHECK(slurp(g_dir / "ds_a.meta.json") == slurp(g_dir / "ds_b.meta.json"));

  spit(g_dir / "bad_rate.json", R"({"n": 100, "p": 6, "r_bias": 1.0})");
  CmdResult bad = run_cli("gen --config bad_rate.json");
  CHECK(bad.code == 2);
  CHECK(bad.output.find("[-3,-1) U (1,3]") != std::string::npos);

  spit(g_dir / "typo.json", R"({"n": 100, "p": 6, "r_bais": 1.7})");
  CHECK(run_cli("gen --config typo.json").code == 2);
}

TEST_CASE("train/eval round trip per method") {
  spit(g_dir / "env.json",
       R"({"n": 400, "p": 6, "outcome_form": "poly", "r_bias": 1.7, "seed": 9})");
  REQUIRE(run_cli("gen --config env.json --out ds").code == 0);

  SUBCASE("ols model has a null rectifier") {
    CmdResult t = run_cli("train --method ols --data ds.csv --out m_ols.json");
    CHECK(t.code == 0);
    CHECK(t.output.find("beta_v_error") != std::string::npos);
    std::string model = slurp(g_dir / "m_ols.json");
    CHECK(model.find("\"w\": null") != std::string::npos);

    CmdResult e = run_cli("eval --model m_ols.json --data ds.csv --out met.json");
    CHECK(e.code == 0);
    CHECK(e.output.find("\"rmse\"") != std::string::npos);
    CHECK(e.output.find("\"accuracy\": null") != std::string::npos);
  }

  SUBCASE("cfr model carries a dense rectifier and history") {
    spit(g_dir / "cfr.json",
         R"({"epochs": 5, "grad_form": "mean", "lr_w": 0.01, "lr_beta": 0.05})");
    CmdResult t = run_cli(
        "train --method cfr --data ds.csv --config cfr.json --out m_cfr.json");
    CHECK(t.code == 0);
    CHECK(t.output.find("final losses") != std::string::npos);
    std::string model = slurp(g_dir / "m_cfr.json");
    CHECK(model.find("\"history\"") != std::string::npos);
    CHECK(model.find("\"w\": null") == std::string::npos);
    CHECK(run_cli("eval --model m_cfr.json --data ds.csv").code == 0);
  }

  SUBCASE("ridge accepts --lambda, unknown methods are exit 2") {
    CHECK(run_cli("train --method ridge --data ds.csv --lambda 5 --out m_r.json").code ==
          0);
    CmdResult bad = run_cli("train --method boosting --data ds.csv");
    CHECK(bad.code == 2);
    CHECK(bad.output.find("ols") != std::string::npos);  // lists valid tags
  }

  SUBCASE("divergent training exits 4") {
    spit(g_dir / "boom.json", R"({"epochs": 50, "grad_form": "sum", "lr_beta": 10.0})");
    CmdResult t =
        run_cli("train --method cfr --data ds.csv --config boom.json --out m.json");
    CHECK(t.code == 4);
  }

  SUBCASE("dimension mismatch between model and data exits 5") {
    spit(g_dir / "env8.json",
         R"({"n": 300, "p": 8, "outcome_form": "poly", "r_bias": 1.7, "seed": 10})");
    REQUIRE(run_cli("gen --config env8.json --out ds8").code == 0);
    REQUIRE(run_cli("train --method ols --data ds8.csv --out m8.json").code == 0);
    CHECK(run_cli("eval --model m8.json --data ds.csv").code == 5);
  }
}

TEST_CASE("classifier training through the CLI") {
  // Tiny separable two-class embedding file.
  std::string csv = "f1,f2,f3,label\n";
  for (int i = 0; i < 30; ++i) {
    bool one = i % 2 == 1;
    double a = one ? 2.0 : -2.0;
    double wiggle = 0.01 * double(i % 7);
    csv += std::to_string(a + wiggle) + "," + std::to_string(-a) + "," +
           std::to_string(wiggle) + "," + (one ? "1" : "0") + "\n";
  }
  spit(g_dir / "emb.csv", csv);
  spit(g_dir / "clf.json", R"({"epochs": 60, "lr_decay_epochs": [40, 50]})");

  CmdResult t = run_cli(
      "train --method cfr-classifier --data emb.csv --config clf.json --out clf_m.json");
  CHECK(t.code == 0);
  CmdResult e = run_cli("eval --model clf_m.json --data emb.csv");
  CHECK(e.code == 0);
  CHECK(e.output.find("\"accuracy\": 1.0") != std::string::npos);

  CHECK(run_cli("train --method linear-classifier --data emb.csv --config clf.json "
                "--out clf_l.json")
            .code == 0);
}

TEST_CASE("sweep bookkeeping, determinism, and report projection") {
  // Smallest meaningful slice of the sample-size sweep.
  CmdResult s1 = run_cli(
      "sweep --scenario table1-s1 --reps 1 --test-reps 1 --out sweep_a");
  CHECK(s1.code == 0);
  std::string csv = slurp(g_dir / "sweep_a" / "results.csv");

  // 3 configurations x 5 methods all present.
  for (const char* scen : {"table1-s1-n1000", "table1-s1-n2000", "table1-s1-n4000"}) {
    for (const char* method : {"ols", "ridge", "lasso", "dwr-like", "cfr"}) {
      CHECK(csv.find(std::string(scen) + "," + method) != std::string::npos);
    }
  }

  CmdResult s2 = run_cli(
      "sweep --scenario table1-s1 --reps 1 --test-reps 1 --out sweep_b");
  CHECK(s2.code == 0);
  CHECK(slurp(g_dir / "sweep_b" / "results.csv") == csv);
  CHECK(slurp(g_dir / "sweep_b" / "report.json") ==
        slurp(g_dir / "sweep_a" / "report.json"));

  // Thread count must not change a byte of the numbers.
  CmdResult s4 = run_cli(
      "sweep --scenario table1-s1 --reps 1 --test-reps 1 --threads 4 --out sweep_c");
  CHECK(s4.code == 0);
  CHECK(slurp(g_dir / "sweep_c" / "results.csv") == csv);

  // report recomputes the same aggregates from the CSV alone.
  CmdResult rep = run_cli("report --results sweep_a/results.csv --out plots");
  CHECK(rep.code == 0);
  CHECK(slurp(g_dir / "plots" / "report.json") ==
        slurp(g_dir / "sweep_a" / "report.json"));
  CHECK(fs::exists(g_dir / "plots" / "curves_table1-s1-n1000.csv"));
  CHECK(fs::exists(g_dir / "plots" / "beta_errors_table1-s1-n2000.csv"));
  std::string curves = slurp(g_dir / "plots" / "curves_table1-s1-n1000.csv");
  CHECK(curves.rfind("r_test,method,mean_rmse\n", 0) == 0);

  CHECK(run_cli("sweep --scenario table9").code == 2);
  CHECK(run_cli("sweep").code == 2);
  CHECK(run_cli("report --results missing.csv").code == 5);

  // Malformed results CSV: report must fail with the row position, exit 5.
  std::string broken = csv;
  auto pos = broken.find('\n', broken.find('\n') + 1);  // end of first data row
  REQUIRE(pos != std::string::npos);
  broken.insert(pos, ",extra");
  spit(g_dir / "broken.csv", broken);
  CmdResult bad = run_cli("report --results broken.csv --out plots2");
  CHECK(bad.code == 5);
  CHECK(bad.output.find(":2") != std::string::npos);
}

TEST_CASE("sweep accepts a custom scenario config") {
  spit(g_dir / "scenario.json", R"({
    "name": "mini",
    "train_spec": {"n": 250, "p": 6, "outcome_form": "poly", "r_bias": 1.7},
    "methods": [{"method": "ols"}, {"method": "ridge", "lambda": 2.5}],
    "test_grid": [-1.7, 1.7],
    "train_reps": 2,
    "test_reps_per_env": 1,
    "base_seed": 7
  })");
  CmdResult res = run_cli("sweep --config scenario.json --out mini_out");
  CHECK(res.code == 0);
  std::string csv = slurp(g_dir / "mini_out" / "results.csv");
  CHECK(csv.find("mini,ols") != std::string::npos);
  CHECK(csv.find("mini,ridge") != std::string::npos);
  CHECK(csv.find("cfr") == std::string::npos);

  CHECK(run_cli("sweep --config scenario.json --scenario table1").code == 2);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-stablereg>\n");
    return 64;
  }
  g_binary = fs::absolute(argv[1]).string();
  g_dir = fs::temp_directory_path() / "cfr_cli_tests";
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);

  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv + 1);
  int rc = ctx.run();
  fs::remove_all(g_dir);
  return rc;
}
