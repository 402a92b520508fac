// betaflow: simulate / estimate / tune / bench for high-frequency
// time-varying regression betas under jumps and heavy tails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "betaflow/errors.hpp"
#include "betaflow/evaluation.hpp"
#include "betaflow/io.hpp"
#include "betaflow/pipeline.hpp"
#include "betaflow/simulator.hpp"
#include "betaflow/tuning.hpp"
#include "betaflow/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace betaflow;

namespace {

double parse_double_inf(const std::string& s) {
  if (s == "inf" || s == "+inf" || s == "Inf" || s == "infinity")
    return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw usage_error("cannot parse number '" + s + "'");
  }
}

json num_or_string(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double json_to_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_double_inf(v.get<std::string>());
  throw usage_error("config key '" + key + "' must be a number");
}

// Flat key = value files with JSON-compatible right-hand sides. '#' starts a
// comment; blank lines are skipped.
std::map<std::string, json> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("config: cannot open '" + path + "'");
  std::map<std::string, json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw data_error("config: missing '=' at " + path + ":" + std::to_string(line_no));
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw data_error("config: empty key or value at " + path + ":" + std::to_string(line_no));
    try {
      out[key] = json::parse(value);
    } catch (const json::parse_error&) {
      // bare words (e.g. red, inf) read as strings
      out[key] = value;
    }
  }
  return out;
}

struct ManifestWriter {
  std::string subcommand;
  json config = json::object();
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> artifacts;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void add_input(const std::string& path) { inputs.emplace_back(path, fnv1a_hex(path)); }

  void write(const fs::path& outdir) const {
    json m;
    m["tool"] = "betaflow";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["config"] = config;
    m["inputs"] = json::array();
    for (const auto& [path, digest] : inputs)
      m["inputs"].push_back({{"path", path}, {"fnv1a64", digest}});
    m["artifacts"] = artifacts;
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
    m["wall_clock_seconds"] = elapsed.count();
    m["created_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    std::ofstream out(outdir / "manifest.json");
    if (!out) throw data_error("manifest: cannot write to " + (outdir / "manifest.json").string());
    out << m.dump(2) << "\n";
  }
};

void ensure_outdir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw data_error("cannot create output directory '" + out + "'");
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// ----------------------------------------------------------------- simulate

json sim_config_json(const SimConfig& c) {
  json j;
  j["p"] = c.p;
  j["n"] = c.n;
  j["n_all"] = c.n_all;
  j["s_p"] = c.resolved_s_p();
  j["df"] = num_or_string(c.df);
  j["jump_intensity_x"] = c.jump_intensity_x;
  j["jump_intensity_y"] = c.jump_intensity_y;
  j["jump_scale"] = c.jump_scale;
  j["rho"] = c.rho;
  j["seed"] = c.seed;
  j["mu_beta"] = c.mu_beta;
  j["beta_init"] = c.beta_init;
  auto ou = [](const OUParams& o) {
    return json::array({o.mean_reversion, o.long_run_mean, o.vol, o.init});
  };
  j["ou_nu"] = ou(c.ou_nu);
  j["ou_u"] = ou(c.ou_u);
  j["ou_xi"] = ou(c.ou_xi);
  return j;
}

void apply_sim_config(const std::map<std::string, json>& file, SimConfig& c) {
  for (const auto& [key, value] : file) {
    if (key == "p") c.p = value.get<int>();
    else if (key == "n") c.n = value.get<int>();
    else if (key == "n_all") c.n_all = value.get<int>();
    else if (key == "s_p") c.s_p = json_to_double(value, key);
    else if (key == "df") c.df = json_to_double(value, key);
    else if (key == "jump_intensity_x") c.jump_intensity_x = json_to_double(value, key);
    else if (key == "jump_intensity_y") c.jump_intensity_y = json_to_double(value, key);
    else if (key == "jump_scale") c.jump_scale = json_to_double(value, key);
    else if (key == "rho") c.rho = json_to_double(value, key);
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "mu_beta") c.mu_beta = json_to_double(value, key);
    else if (key == "beta_init") c.beta_init = json_to_double(value, key);
    else if (key == "ou_nu" || key == "ou_u" || key == "ou_xi") {
      if (!value.is_array() || value.size() != 4)
        throw usage_error("config key '" + key + "' must be [mean_reversion, mean, vol, init]");
      OUParams o{value[0].get<double>(), value[1].get<double>(), value[2].get<double>(),
                 value[3].get<double>()};
      if (key == "ou_nu") c.ou_nu = o;
      else if (key == "ou_u") c.ou_u = o;
      else c.ou_xi = o;
    } else {
      throw usage_error("unknown simulate config key '" + key + "'");
    }
  }
}

int run_simulate(const SimConfig& cfg, const std::string& out) {
  ensure_outdir(out);
  ManifestWriter manifest;
  manifest.subcommand = "simulate";
  manifest.config = sim_config_json(cfg);

  const SimOutput sim = simulate_paths(cfg);
  const fs::path dir(out);

  write_panel_csv((dir / "panel.csv").string(), sim.panel);
  manifest.artifacts.push_back("panel.csv");

  {
    std::ofstream f(dir / "truth_integrated.csv");
    for (int j = 0; j < cfg.p; ++j) f << (j ? "," : "") << "beta_" << (j + 1);
    f << "\n";
    for (int j = 0; j < cfg.p; ++j) f << (j ? "," : "") << fmt17(sim.true_integrated_beta[j]);
    f << "\n";
    manifest.artifacts.push_back("truth_integrated.csv");
  }
  {
    std::ofstream f(dir / "truth_spot.csv");
    f << "t";
    for (int j = 0; j < cfg.p; ++j) f << ",beta_" << (j + 1);
    f << "\n";
    for (int l = 0; l <= cfg.n_all; ++l) {
      f << fmt17(static_cast<double>(l) / cfg.n_all);
      for (int j = 0; j < cfg.p; ++j) f << ',' << fmt17(sim.true_spot_beta(l, j));
      f << "\n";
    }
    manifest.artifacts.push_back("truth_spot.csv");
  }
  {
    std::ofstream f(dir / "config.json");
    f << manifest.config.dump(2) << "\n";
    manifest.artifacts.push_back("config.json");
  }
  manifest.write(dir);
  std::cout << "simulate: wrote " << (dir / "panel.csv").string() << " (n=" << cfg.n
            << ", p=" << cfg.p << ")\n";
  return 0;
}

// ----------------------------------------------------------------- estimate

json estimator_config_json(const EstimatorConfig& c) {
  json j;
  j["method"] = method_name(c.method);
  j["k_n"] = c.k_n;
  j["c_tau"] = num_or_string(c.c_tau);
  j["c_eta"] = c.c_eta;
  j["c_lambda"] = c.c_lambda;
  j["c_varpi"] = num_or_string(c.c_varpi);
  j["c_h"] = c.c_h;
  j["threshold_rule"] = c.threshold_rule == ThresholdRule::Hard ? "hard" : "soft";
  j["force_truncate_y"] = c.force_truncate_y;
  j["theoretical_varpi"] = c.theoretical_varpi;
  j["lambda_select_windows"] = c.lambda_select_windows;
  j["threads"] = c.threads;
  j["kkt_tol"] = c.kkt_tol;
  j["max_iter"] = c.max_iter;
  j["eta_grid"] = c.eta_grid;
  j["lambda_grid"] = c.lambda_grid;
  json mask = json::array();
  for (const auto& [a, b] : c.zero_mask) mask.push_back(json::array({a, b}));
  j["zero_mask"] = mask;
  return j;
}

void apply_estimator_config(const std::map<std::string, json>& file, EstimatorConfig& c) {
  for (const auto& [key, value] : file) {
    if (key == "method") c.method = method_from_name(value.get<std::string>());
    else if (key == "k_n") c.k_n = value.get<int>();
    else if (key == "c_tau") c.c_tau = json_to_double(value, key);
    else if (key == "c_eta") c.c_eta = json_to_double(value, key);
    else if (key == "c_lambda") c.c_lambda = json_to_double(value, key);
    else if (key == "c_varpi") c.c_varpi = json_to_double(value, key);
    else if (key == "c_h") c.c_h = json_to_double(value, key);
    else if (key == "threshold_rule") {
      const std::string rule = value.get<std::string>();
      if (rule == "hard") c.threshold_rule = ThresholdRule::Hard;
      else if (rule == "soft") c.threshold_rule = ThresholdRule::Soft;
      else throw usage_error("threshold_rule must be hard or soft");
    } else if (key == "force_truncate_y") c.force_truncate_y = value.get<bool>();
    else if (key == "theoretical_varpi") c.theoretical_varpi = value.get<bool>();
    else if (key == "varpi_s_p") c.varpi_s_p = json_to_double(value, key);
    else if (key == "varpi_delta") c.varpi_delta = json_to_double(value, key);
    else if (key == "lambda_select_windows") c.lambda_select_windows = value.get<int>();
    else if (key == "threads") c.threads = value.get<int>();
    else if (key == "kkt_tol") c.kkt_tol = json_to_double(value, key);
    else if (key == "max_iter") c.max_iter = value.get<int>();
    else if (key == "eta_grid" || key == "lambda_grid") {
      std::vector<double> grid;
      for (const auto& v : value) grid.push_back(json_to_double(v, key));
      (key == "eta_grid" ? c.eta_grid : c.lambda_grid) = grid;
    } else if (key == "zero_mask") {
      c.zero_mask.clear();
      for (const auto& pair : value)
        c.zero_mask.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    } else {
      throw usage_error("unknown estimate config key '" + key + "'");
    }
  }
}

json integrated_beta_result_json(const IntegratedBeta& est) {
  json r;
  r["p"] = est.p;
  r["n"] = est.n;
  r["k_n"] = est.k_n;
  r["windows"] = static_cast<int>(est.diagnostics.size());
  r["debiased"] = vector_json(est.debiased);
  r["thresholded"] = vector_json(est.thresholded);
  r["naive"] = vector_json(est.naive);
  r["tuning"] = {{"tau", num_or_string(est.tuning.tau)},
                 {"eta", est.tuning.eta},
                 {"lambda", est.tuning.lambda},
                 {"varpi", num_or_string(est.tuning.varpi)},
                 {"h_n", est.tuning.h_n}};
  r["eta_solver"] = est.eta_solver;
  r["lambda_used"] = est.lambda_used;
  r["c_eta_used"] = est.c_eta_used;
  r["c_lambda_used"] = est.c_lambda_used;
  int failed = 0, masked = 0;
  for (const auto& d : est.diagnostics) {
    if (d.carried_forward) ++failed;
    if (d.masked) ++masked;
  }
  r["carried_forward_windows"] = failed;
  r["masked_windows"] = masked;
  return r;
}

void write_spot_csv(const fs::path& path, const IntegratedBeta& est) {
  std::ofstream f(path);
  f << "t";
  for (int j = 1; j <= est.p; ++j) f << ",beta_" << j;
  f << ",debiased\n";
  const int windows = static_cast<int>(est.diagnostics.size());
  for (int m = 0; m < windows; ++m) {
    f << fmt17(est.window_times[m]);
    for (int j = 0; j < est.p; ++j) f << ',' << fmt17(est.spot_hat(m, j));
    f << ",0\n";
    f << fmt17(est.window_times[m]);
    for (int j = 0; j < est.p; ++j) f << ',' << fmt17(est.spot_debiased(m, j));
    f << ",1\n";
  }
}

int run_estimate(const EstimatorConfig& cfg, const std::string& panel_path,
                 const std::string& out) {
  ensure_outdir(out);
  ManifestWriter manifest;
  manifest.subcommand = "estimate";
  manifest.config = estimator_config_json(cfg);
  manifest.add_input(panel_path);

  const LogPricePanel panel = read_panel_csv(panel_path);
  const IncrementSet inc = make_increments(panel);
  const fs::path dir(out);

  json output;
  output["config"] = manifest.config;
  if (cfg.method == Method::LASSO) {
    LassoBaseline lasso;
    if (cfg.c_eta > 0.0) {
      lasso.eta_lasso = cfg.c_eta;
      lasso.beta = run_lasso_baseline(inc, lasso.eta_lasso);
    } else {
      lasso = run_lasso_baseline_bic(inc, cfg.eta_grid);
    }
    json r;
    r["p"] = inc.p();
    r["n"] = inc.n();
    r["thresholded"] = vector_json(lasso.beta);
    r["eta_lasso"] = lasso.eta_lasso;
    output["result"] = r;
  } else {
    const IntegratedBeta est = run_red_lasso(inc, cfg);
    output["result"] = integrated_beta_result_json(est);
    write_spot_csv(dir / "spot_path.csv", est);
    manifest.artifacts.push_back("spot_path.csv");
  }

  std::ofstream f(dir / "integrated_beta.json");
  f << output.dump(2) << "\n";
  manifest.artifacts.push_back("integrated_beta.json");
  manifest.write(dir);
  std::cout << "estimate: wrote " << (dir / "integrated_beta.json").string() << "\n";
  return 0;
}

// --------------------------------------------------------------------- tune

int run_tune(const EstimatorConfig& base, const std::vector<std::string>& panel_paths,
             const std::vector<double>& grid_tau, const std::vector<double>& grid_varpi,
             const std::vector<double>& grid_h, const std::string& out) {
  ensure_outdir(out);
  ManifestWriter manifest;
  manifest.subcommand = "tune";
  manifest.config = estimator_config_json(base);
  manifest.config["grid_tau"] = grid_tau;
  manifest.config["grid_varpi"] = grid_varpi;
  manifest.config["grid_h"] = grid_h;

  std::vector<LogPricePanel> panels;
  for (const std::string& path : panel_paths) {
    manifest.add_input(path);
    panels.push_back(read_panel_csv(path));
  }

  const TuningReport report = select_mspe_constants(panels, grid_tau, grid_varpi, grid_h, base);

  json j;
  j["chosen"] = report.chosen;
  j["criterion"] = report.criterion;
  json scores;
  for (const auto& [name, rows] : report.grid_scores) {
    json arr = json::array();
    for (const auto& [value, score] : rows) arr.push_back({{"value", value}, {"score", score}});
    scores[name] = arr;
  }
  j["grid_scores"] = scores;

  const fs::path dir(out);
  std::ofstream f(dir / "tuning_report.json");
  f << j.dump(2) << "\n";
  manifest.artifacts.push_back("tuning_report.json");
  manifest.write(dir);
  std::cout << "tune: c_tau=" << report.chosen.at("c_tau")
            << " c_varpi=" << report.chosen.at("c_varpi") << " c_h=" << report.chosen.at("c_h")
            << "\n";
  return 0;
}

// -------------------------------------------------------------------- bench

std::string regime_name(double df) { return std::isinf(df) ? "subgaussian" : "heavy"; }

int run_bench(const BenchmarkSpec& spec, const std::string& out) {
  ensure_outdir(out);
  ManifestWriter manifest;
  manifest.subcommand = "bench";
  manifest.config = sim_config_json(spec.sim);
  manifest.config["n_values"] = spec.n_values;
  manifest.config["replications"] = spec.replications;
  json regimes = json::array();
  for (double df : spec.regimes) regimes.push_back(num_or_string(df));
  manifest.config["regimes"] = regimes;
  json methods = json::array();
  for (Method m : spec.methods) methods.push_back(method_name(m));
  manifest.config["methods"] = methods;
  manifest.config["estimator"] = estimator_config_json(spec.estimator);
  manifest.config["base_seed"] = spec.base_seed;
  manifest.config["reuse_cell_tuning"] = spec.reuse_cell_tuning;

  const BenchmarkResult result = run_benchmark(spec);

  const fs::path dir(out);
  {
    std::ofstream f(dir / "benchmark.csv");
    f << "method,regime,n,seed,max,l1,l2\n";
    for (const SeedRecord& r : result.records) {
      f << method_name(r.method) << ',' << regime_name(r.df) << ',' << r.n << ',' << r.seed << ',';
      if (r.failed)
        f << "nan,nan,nan\n";
      else
        f << fmt17(r.error.max_err) << ',' << fmt17(r.error.l1) << ',' << fmt17(r.error.l2)
          << "\n";
    }
    manifest.artifacts.push_back("benchmark.csv");
  }
  {
    json j;
    j["failures"] = result.failures;
    json cells = json::array();
    for (const CellSummary& c : result.cells) {
      cells.push_back({{"method", method_name(c.method)},
                       {"regime", regime_name(c.df)},
                       {"n", c.n},
                       {"count", c.count},
                       {"mean_max", c.mean_max},
                       {"se_max", c.se_max},
                       {"mean_l1", c.mean_l1},
                       {"se_l1", c.se_l1},
                       {"mean_l2", c.mean_l2},
                       {"se_l2", c.se_l2}});
    }
    j["cells"] = cells;
    std::ofstream f(dir / "benchmark.json");
    f << j.dump(2) << "\n";
    manifest.artifacts.push_back("benchmark.json");
  }
  manifest.write(dir);
  std::cout << "bench: " << result.records.size() << " records, " << result.failures
            << " failures\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"betaflow: robust time-varying beta estimation from high-frequency panels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("betaflow ") + kVersion);

  std::string config_path;
  int threads = 0;

  // ---- simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic log-price panel");
  std::string sim_out;
  SimConfig sim_cfg;
  std::string sim_df = "2", sim_sp;
  sim_cmd->add_option("--out", sim_out, "output directory")->required();
  sim_cmd->add_option("--p", sim_cfg.p, "covariate dimension");
  sim_cmd->add_option("--n", sim_cfg.n, "observation grid size");
  sim_cmd->add_option("--n-all", sim_cfg.n_all, "generation grid size");
  sim_cmd->add_option("--s-p", sim_sp, "sparsity level (default log p)");
  sim_cmd->add_option("--df", sim_df, "t degrees of freedom, or inf");
  sim_cmd->add_option("--jump-intensity-x", sim_cfg.jump_intensity_x);
  sim_cmd->add_option("--jump-intensity-y", sim_cfg.jump_intensity_y);
  sim_cmd->add_option("--jump-scale", sim_cfg.jump_scale);
  sim_cmd->add_option("--rho", sim_cfg.rho);
  sim_cmd->add_option("--seed", sim_cfg.seed);
  sim_cmd->add_option("--config", config_path, "flat key=value config file");

  // ---- estimate
  auto* est_cmd = app.add_subcommand("estimate", "run an estimator on a panel CSV");
  std::string est_panel, est_out, est_method = "red", est_rule = "hard";
  std::string est_ctau = "16", est_cvarpi;
  EstimatorConfig est_cfg;
  est_cmd->add_option("--panel", est_panel, "input panel CSV")->required();
  est_cmd->add_option("--out", est_out, "output directory")->required();
  est_cmd->add_option("--method", est_method, "red | ed | lasso");
  est_cmd->add_option("--k-n", est_cfg.k_n, "window length (0 = floor(sqrt(n)))");
  est_cmd->add_option("--c-tau", est_ctau, "robustification constant, or inf");
  est_cmd->add_option("--c-eta", est_cfg.c_eta, "penalty constant (<=0: BIC-selected)");
  est_cmd->add_option("--c-lambda", est_cfg.c_lambda, "precision constant (<=0: loss-selected)");
  est_cmd->add_option("--c-varpi", est_cvarpi, "winsorization constant, or inf");
  est_cmd->add_option("--c-h", est_cfg.c_h, "threshold constant");
  est_cmd->add_option("--threshold", est_rule, "hard | soft");
  est_cmd->add_flag("--truncate-y", est_cfg.force_truncate_y,
                    "regress on jump-truncated Y increments");
  est_cmd->add_option("--lambda-select-windows", est_cfg.lambda_select_windows,
                      "windows used when selecting lambda (0 = all)");
  est_cmd->add_option("--threads", threads, "worker threads (0 = auto)");
  est_cmd->add_option("--config", config_path, "flat key=value config file");

  // ---- tune
  auto* tune_cmd = app.add_subcommand("tune", "MSPE calibration of c_tau, c_varpi, c_h");
  std::vector<std::string> tune_panels;
  std::string tune_out;
  tune_cmd->add_option("--panels", tune_panels, "calibration panel CSVs, in period order")
      ->required()
      ->expected(-1);
  tune_cmd->add_option("--out", tune_out, "output directory")->required();
  tune_cmd->add_option("--threads", threads, "worker threads (0 = auto)");
  tune_cmd->add_option("--config", config_path, "flat key=value config file");

  // ---- bench
  auto* bench_cmd = app.add_subcommand("bench", "multi-seed estimator comparison");
  std::string bench_out;
  BenchmarkSpec bench;
  bench.sim.p = 50;
  bench.sim.n_all = 4000;
  std::vector<std::string> bench_regimes{"heavy", "subgaussian"};
  std::vector<std::string> bench_methods{"red", "ed", "lasso"};
  bench_cmd->add_option("--out", bench_out, "output directory")->required();
  bench_cmd->add_option("--p", bench.sim.p, "covariate dimension");
  bench_cmd->add_option("--n-all", bench.sim.n_all, "generation grid size");
  bench_cmd->add_option("--n-values", bench.n_values, "observation sizes")->expected(-1);
  bench_cmd->add_option("--replications", bench.replications);
  bench_cmd->add_option("--regimes", bench_regimes, "heavy and/or subgaussian")->expected(-1);
  bench_cmd->add_option("--methods", bench_methods)->expected(-1);
  bench_cmd->add_option("--seed", bench.base_seed, "base seed");
  bench_cmd->add_option("--threads", threads, "worker threads (0 = auto)");
  bench_cmd->add_option("--config", config_path, "flat key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << R"({"error":"usage","message":")" << e.what() << "\"}\n";
    return 2;
  }

  try {
    std::map<std::string, json> file_cfg;
    if (!config_path.empty()) file_cfg = read_config_file(config_path);

    if (sim_cmd->parsed()) {
      // precedence: flag > config file > default
      SimConfig cfg;
      apply_sim_config(file_cfg, cfg);
      if (sim_cmd->count("--p")) cfg.p = sim_cfg.p;
      if (sim_cmd->count("--n")) cfg.n = sim_cfg.n;
      if (sim_cmd->count("--n-all")) cfg.n_all = sim_cfg.n_all;
      if (sim_cmd->count("--s-p")) cfg.s_p = parse_double_inf(sim_sp);
      if (sim_cmd->count("--df")) cfg.df = parse_double_inf(sim_df);
      if (sim_cmd->count("--jump-intensity-x")) cfg.jump_intensity_x = sim_cfg.jump_intensity_x;
      if (sim_cmd->count("--jump-intensity-y")) cfg.jump_intensity_y = sim_cfg.jump_intensity_y;
      if (sim_cmd->count("--jump-scale")) cfg.jump_scale = sim_cfg.jump_scale;
      if (sim_cmd->count("--rho")) cfg.rho = sim_cfg.rho;
      if (sim_cmd->count("--seed")) cfg.seed = sim_cfg.seed;
      return run_simulate(cfg, sim_out);
    }

    if (est_cmd->parsed()) {
      EstimatorConfig cfg;
      apply_estimator_config(file_cfg, cfg);
      if (est_cmd->count("--method")) cfg.method = method_from_name(est_method);
      if (est_cmd->count("--k-n")) cfg.k_n = est_cfg.k_n;
      if (est_cmd->count("--c-tau")) cfg.c_tau = parse_double_inf(est_ctau);
      if (est_cmd->count("--c-eta")) cfg.c_eta = est_cfg.c_eta;
      if (est_cmd->count("--c-lambda")) cfg.c_lambda = est_cfg.c_lambda;
      if (est_cmd->count("--c-varpi")) cfg.c_varpi = parse_double_inf(est_cvarpi);
      if (est_cmd->count("--c-h")) cfg.c_h = est_cfg.c_h;
      if (est_cmd->count("--threshold")) {
        if (est_rule == "hard") cfg.threshold_rule = ThresholdRule::Hard;
        else if (est_rule == "soft") cfg.threshold_rule = ThresholdRule::Soft;
        else throw usage_error("--threshold must be hard or soft");
      }
      if (est_cmd->count("--truncate-y")) cfg.force_truncate_y = est_cfg.force_truncate_y;
      if (est_cmd->count("--lambda-select-windows"))
        cfg.lambda_select_windows = est_cfg.lambda_select_windows;
      if (est_cmd->count("--threads")) cfg.threads = threads;
      return run_estimate(cfg, est_panel, est_out);
    }

    if (tune_cmd->parsed()) {
      EstimatorConfig cfg;
      std::vector<double> grid_tau = dyadic_grid(0, 10);
      std::vector<double> grid_varpi = dyadic_grid(-10, 0);
      std::vector<double> grid_h = dyadic_grid(-5, 5);
      std::map<std::string, json> est_keys;
      for (const auto& [key, value] : file_cfg) {
        if (key == "grid_tau" || key == "grid_varpi" || key == "grid_h") {
          std::vector<double> grid;
          for (const auto& v : value) grid.push_back(json_to_double(v, key));
          if (key == "grid_tau") grid_tau = grid;
          else if (key == "grid_varpi") grid_varpi = grid;
          else grid_h = grid;
        } else {
          est_keys[key] = value;
        }
      }
      apply_estimator_config(est_keys, cfg);
      if (tune_cmd->count("--threads")) cfg.threads = threads;
      return run_tune(cfg, tune_panels, grid_tau, grid_varpi, grid_h, tune_out);
    }

    if (bench_cmd->parsed()) {
      // Stash flag-provided values so the config file cannot clobber them.
      const int flag_p = bench.sim.p;
      const int flag_n_all = bench.sim.n_all;
      const auto flag_n_values = bench.n_values;
      const int flag_reps = bench.replications;
      const auto flag_seed = bench.base_seed;
      const auto flag_regimes = bench_regimes;
      const auto flag_methods = bench_methods;

      std::map<std::string, json> est_keys, sim_keys;
      for (const auto& [key, value] : file_cfg) {
        if (key == "n_values") {
          bench.n_values.clear();
          for (const auto& v : value) bench.n_values.push_back(v.get<int>());
        } else if (key == "replications") bench.replications = value.get<int>();
        else if (key == "regimes") {
          bench_regimes.clear();
          for (const auto& v : value) bench_regimes.push_back(v.get<std::string>());
        } else if (key == "methods") {
          bench_methods.clear();
          for (const auto& v : value) bench_methods.push_back(v.get<std::string>());
        } else if (key == "base_seed") bench.base_seed = value.get<std::uint64_t>();
        else if (key == "reuse_cell_tuning") bench.reuse_cell_tuning = value.get<bool>();
        else if (key == "p" || key == "n_all" || key == "s_p" || key == "df" ||
                 key.rfind("jump_", 0) == 0 || key == "rho" || key == "seed" ||
                 key == "mu_beta" || key == "beta_init" || key.rfind("ou_", 0) == 0)
          sim_keys[key] = value;
        else est_keys[key] = value;
      }
      apply_sim_config(sim_keys, bench.sim);
      apply_estimator_config(est_keys, bench.estimator);
      if (bench_cmd->count("--p")) bench.sim.p = flag_p;
      if (bench_cmd->count("--n-all")) bench.sim.n_all = flag_n_all;
      if (bench_cmd->count("--n-values")) bench.n_values = flag_n_values;
      if (bench_cmd->count("--replications")) bench.replications = flag_reps;
      if (bench_cmd->count("--seed")) bench.base_seed = flag_seed;
      if (bench_cmd->count("--regimes")) bench_regimes = flag_regimes;
      if (bench_cmd->count("--methods")) bench_methods = flag_methods;

      bench.regimes.clear();
      for (const std::string& r : bench_regimes) {
        if (r == "heavy") bench.regimes.push_back(2.0);
        else if (r == "subgaussian") bench.regimes.push_back(std::numeric_limits<double>::infinity());
        else bench.regimes.push_back(parse_double_inf(r));
      }
      bench.methods.clear();
      for (const std::string& m : bench_methods) bench.methods.push_back(method_from_name(m));
      if (bench_cmd->count("--threads")) bench.threads = threads;
      return run_bench(bench, bench_out);
    }
  } catch (const usage_error& e) {
    std::cerr << R"({"error":"usage","message":")" << e.what() << "\"}\n";
    return 2;
  } catch (const data_error& e) {
    std::cerr << R"({"error":"data","message":")" << e.what() << "\"}\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << R"({"error":"numerical","message":")" << e.what() << "\"}\n";
    return 4;
  }
  return 0;
}
