#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kBin = BETAFLOW_BIN;

int run(const std::string& args) {
  const std::string cmd = kBin + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("simulate twice with the same seed writes byte-identical panels") {
  TempDir dir("bf_cli_sim");
  const std::string common = "simulate --p 4 --n 100 --n-all 200 --seed 7 --df 2";
  REQUIRE(run(common + " --out " + dir.str("a")) == 0);
  REQUIRE(run(common + " --out " + dir.str("b")) == 0);
  CHECK(slurp(dir.path / "a" / "panel.csv") == slurp(dir.path / "b" / "panel.csv"));
  CHECK(fs::exists(dir.path / "a" / "truth_integrated.csv"));
  CHECK(fs::exists(dir.path / "a" / "truth_spot.csv"));
  CHECK(fs::exists(dir.path / "a" / "manifest.json"));
  // exactly one manifest per output directory
  int manifests = 0;
  for (const auto& entry : fs::directory_iterator(dir.path / "a"))
    if (entry.path().filename() == "manifest.json") ++manifests;
  CHECK(manifests == 1);
}

TEST_CASE("estimate consumes the simulator's panel unmodified") {
  TempDir dir("bf_cli_roundtrip");
  REQUIRE(run("simulate --p 4 --n 200 --n-all 400 --seed 3 --out " + dir.str("sim")) == 0);
  REQUIRE(run("estimate --panel " + dir.str("sim/panel.csv") +
              " --method red --lambda-select-windows 2 --out " + dir.str("est")) == 0);
  const std::string json = slurp(dir.path / "est" / "integrated_beta.json");
  CHECK(json.find("\"thresholded\"") != std::string::npos);
  CHECK(json.find("\"debiased\"") != std::string::npos);
  CHECK(fs::exists(dir.path / "est" / "spot_path.csv"));
  CHECK(fs::exists(dir.path / "est" / "manifest.json"));

  const std::string spot = slurp(dir.path / "est" / "spot_path.csv");
  CHECK(spot.rfind("t,beta_1", 0) == 0);
}

TEST_CASE("ED output is byte-identical to RED with infinite constants and truncated Y") {
  TempDir dir("bf_cli_ed");
  REQUIRE(run("simulate --p 4 --n 200 --n-all 400 --seed 11 --out " + dir.str("sim")) == 0);
  const std::string panel = dir.str("sim/panel.csv");
  REQUIRE(run("estimate --panel " + panel + " --method ed --lambda-select-windows 2 --out " +
              dir.str("ed")) == 0);
  REQUIRE(run("estimate --panel " + panel +
              " --method red --c-tau inf --c-varpi inf --truncate-y"
              " --lambda-select-windows 2 --out " +
              dir.str("red_inf")) == 0);
  CHECK(slurp(dir.path / "ed" / "spot_path.csv") == slurp(dir.path / "red_inf" / "spot_path.csv"));

  // numeric results identical; config echoes differ only in the method fields
  auto result_part = [](const std::string& s) {
    const auto pos = s.find("\"result\"");
    REQUIRE(pos != std::string::npos);
    return s.substr(pos);
  };
  CHECK(result_part(slurp(dir.path / "ed" / "integrated_beta.json")) ==
        result_part(slurp(dir.path / "red_inf" / "integrated_beta.json")));
}

TEST_CASE("config precedence: flag beats file beats default") {
  TempDir dir("bf_cli_cfg");
  {
    std::ofstream f(dir.path / "sim.cfg");
    f << "# config file layer\n";
    f << "p = 5\n";
    f << "seed = 21\n";
    f << "df = \"inf\"\n";
  }
  // file layer sets p=5; flag layer overrides seed; n stays at its default
  REQUIRE(run("simulate --config " + dir.str("sim.cfg") + " --n 100 --n-all 200 --seed 9 --out " +
              dir.str("out")) == 0);
  const std::string manifest = slurp(dir.path / "out" / "manifest.json");
  CHECK(manifest.find("\"p\": 5") != std::string::npos);        // from file
  CHECK(manifest.find("\"seed\": 9") != std::string::npos);     // flag wins
  CHECK(manifest.find("\"df\": \"inf\"") != std::string::npos); // from file
  const std::string panel = slurp(dir.path / "out" / "panel.csv");
  CHECK(panel.rfind("t,Y,X_1,X_2,X_3,X_4,X_5", 0) == 0);
}

TEST_CASE("exit codes: usage 2, data 3") {
  CHECK(run("estimate --no-such-flag") == 2);
  CHECK(run("frobnicate") == 2);
  TempDir dir("bf_cli_err");
  CHECK(run("estimate --panel /nonexistent.csv --out " + dir.str("x")) == 3);
  {
    std::ofstream f(dir.path / "bad.csv");
    f << "t,Y,X_1\n0,0,0\n0.5,oops,1\n1,0,0\n";
  }
  CHECK(run("estimate --panel " + dir.str("bad.csv") + " --out " + dir.str("y")) == 3);
}

TEST_CASE("bench row count equals methods x regimes x n_values x replications" *
          doctest::timeout(600)) {
  TempDir dir("bf_cli_bench");
  {
    std::ofstream f(dir.path / "bench.cfg");
    f << "p = 6\n";
    f << "n_all = 400\n";
    f << "n_values = [200]\n";
    f << "replications = 2\n";
    f << "regimes = [\"heavy\", \"subgaussian\"]\n";
    f << "methods = [\"red\", \"lasso\"]\n";
    f << "lambda_select_windows = 1\n";
  }
  REQUIRE(run("bench --config " + dir.str("bench.cfg") + " --threads 2 --out " + dir.str("out")) ==
          0);
  const std::string csv = slurp(dir.path / "out" / "benchmark.csv");
  // header + methods(2) x regimes(2) x n(1) x reps(2)
  CHECK(count_lines(csv) == 1 + 2 * 2 * 1 * 2);
  CHECK(fs::exists(dir.path / "out" / "benchmark.json"));
  CHECK(fs::exists(dir.path / "out" / "manifest.json"));
}

TEST_CASE("tune subcommand calibrates on two panels" * doctest::timeout(600)) {
  TempDir dir("bf_cli_tune");
  REQUIRE(run("simulate --p 5 --n 200 --n-all 400 --seed 61 --out " + dir.str("m1")) == 0);
  REQUIRE(run("simulate --p 5 --n 200 --n-all 400 --seed 62 --out " + dir.str("m2")) == 0);
  {
    std::ofstream f(dir.path / "tune.cfg");
    f << "grid_tau = [4, 16, 64]\n";
    f << "grid_varpi = [0.015625, 0.25]\n";
    f << "grid_h = [0.25, 1.0]\n";
    f << "lambda_select_windows = 1\n";
  }
  REQUIRE(run("tune --panels " + dir.str("m1/panel.csv") + " " + dir.str("m2/panel.csv") +
              " --config " + dir.str("tune.cfg") + " --threads 2 --out " + dir.str("out")) == 0);
  const std::string report = slurp(dir.path / "out" / "tuning_report.json");
  CHECK(report.find("\"c_tau\"") != std::string::npos);
  CHECK(report.find("\"c_varpi\"") != std::string::npos);
  CHECK(report.find("\"c_h\"") != std::string::npos);
  CHECK(report.find("\"grid_scores\"") != std::string::npos);
}

TEST_CASE("version flag") {
  CHECK(run("--version") == 0);
}
