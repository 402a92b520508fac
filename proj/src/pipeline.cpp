#include "betaflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "betaflow/clime.hpp"
#include "betaflow/errors.hpp"
#include "betaflow/parallel.hpp"
#include "betaflow/tuning.hpp"

namespace betaflow {

std::string method_name(Method m) {
  switch (m) {
    case Method::RED: return "red";
    case Method::ED: return "ed";
    case Method::LASSO: return "lasso";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "red" || name == "RED") return Method::RED;
  if (name == "ed" || name == "ED") return Method::ED;
  if (name == "lasso" || name == "LASSO") return Method::LASSO;
  throw usage_error("unknown method '" + name + "' (expected red, ed or lasso)");
}

std::vector<double> default_constant_grid() {
  std::vector<double> grid;
  grid.reserve(13);
  for (int i = 0; i <= 12; ++i) grid.push_back(0.1 * std::pow(10.0, i / 6.0));
  grid.back() = 10.0;  // kill the last rounding wobble
  return grid;
}

TuningValues tuning_values(int n, double log_p, double c_tau, double c_eta, double c_lambda,
                           double c_varpi, double c_h) {
  const double nd = static_cast<double>(n);
  TuningValues t;
  t.tau = c_tau * std::pow(nd, -0.25) * std::pow(log_p, -0.75);
  t.eta = c_eta * std::pow(nd, -1.25) * std::pow(log_p, 0.75);
  t.lambda = c_lambda * std::pow(nd, -0.25) * std::sqrt(log_p);
  t.varpi = c_varpi * std::pow(log_p, 0.25);
  t.h_n = c_h * std::pow(nd, -0.5) * std::pow(log_p, 1.5);
  return t;
}

TuningValues compute_tuning(int n, int p, const EstimatorConfig& config) {
  if (n < 4) throw usage_error("compute_tuning: n must be >= 4");
  if (p < 2) throw usage_error("compute_tuning: p must be >= 2");
  const double c_eta = config.c_eta > 0.0 ? config.c_eta : 1.0;
  const double c_lambda = config.c_lambda > 0.0 ? config.c_lambda : 1.0;
  TuningValues t = tuning_values(n, std::log(static_cast<double>(p)), config.c_tau, c_eta,
                                 c_lambda, config.c_varpi, config.c_h);
  if (config.theoretical_varpi && !std::isinf(config.c_varpi)) {
    const double sp = config.varpi_s_p;
    const double delta = config.varpi_delta;
    t.varpi = config.c_varpi * std::pow(sp, 2.0 - delta) *
              std::pow(static_cast<double>(n), delta / 4.0) *
              std::pow(std::log(static_cast<double>(p)), (1.0 - 3.0 * delta) / 4.0);
  }
  return t;
}

Eigen::VectorXd winsorize_vector(const Eigen::VectorXd& v, double varpi) {
  if (!(varpi > 0.0)) throw usage_error("winsorize_vector: varpi must be positive");
  if (std::isinf(varpi)) return v;
  return v.cwiseMax(-varpi).cwiseMin(varpi);
}

Eigen::VectorXd debias_spot(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& omega_hat,
                            const Eigen::MatrixXd& design_next, const Eigen::VectorXd& response_next,
                            int k_n, double delta_n, double varpi) {
  const auto p = beta_hat.size();
  if (omega_hat.rows() != p || omega_hat.cols() != p)
    throw usage_error("debias_spot: omega dimension mismatch");
  if (design_next.cols() != p || design_next.rows() != response_next.size() ||
      design_next.rows() != k_n)
    throw usage_error("debias_spot: window dimension mismatch");
  const Eigen::VectorXd residual = response_next - design_next * beta_hat;
  Eigen::VectorXd correction =
      omega_hat.transpose() * (design_next.transpose() * residual) / (k_n * delta_n);
  return beta_hat + winsorize_vector(correction, varpi);
}

Eigen::VectorXd integrate(const std::vector<Eigen::VectorXd>& spots, int k_n, double delta_n) {
  if (k_n < 1 || !(delta_n > 0.0)) throw usage_error("integrate: bad window parameters");
  const double mass = k_n * delta_n;
  const int blocks = static_cast<int>(std::floor(1.0 / mass + 1e-9));
  const int terms = blocks - 1;
  if (terms < 1) throw usage_error("integrate: window longer than half the sample");
  if (static_cast<int>(spots.size()) < terms)
    throw usage_error("integrate: need at least " + std::to_string(terms) + " spot estimates");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(spots[0].size());
  for (int i = 0; i < terms; ++i) acc += spots[i];
  return acc * mass;
}

Eigen::VectorXd threshold(const Eigen::VectorXd& i_beta, double h_n, ThresholdRule rule) {
  if (h_n < 0.0) throw usage_error("threshold: h_n must be >= 0");
  Eigen::VectorXd out(i_beta.size());
  for (Eigen::Index i = 0; i < i_beta.size(); ++i) {
    const double x = i_beta[i];
    if (std::abs(x) < h_n) {
      out[i] = 0.0;
    } else if (rule == ThresholdRule::Hard) {
      out[i] = x;
    } else {
      out[i] = x - (x > 0.0 ? h_n : -h_n);
    }
  }
  return out;
}

WindowSchedule make_schedule(int n, int k_n_request) {
  WindowSchedule s;
  s.k_n = k_n_request > 0 ? k_n_request : static_cast<int>(std::floor(std::sqrt(n)));
  if (s.k_n < 2) throw usage_error("pipeline: k_n must be >= 2");
  if (2 * s.k_n > n)
    throw usage_error("pipeline: need n >= 2 k_n (two non-overlapping windows)");
  s.count = n / s.k_n - 1;
  s.delta_n = 1.0 / n;
  return s;
}

namespace {

// ED is RED with infinite robustification plus the dependent-process jump
// adjustment; normalizing here makes the equivalence literal.
EstimatorConfig resolve_method(const EstimatorConfig& config) {
  EstimatorConfig out = config;
  if (config.method == Method::ED) {
    out.c_tau = std::numeric_limits<double>::infinity();
    out.c_varpi = std::numeric_limits<double>::infinity();
    out.force_truncate_y = true;
  }
  return out;
}


// The tuning display needs log p > 0; a univariate panel borrows the p = 2
// scale so the pipeline's p = 1 reduction stays defined.
TuningValues pipeline_tuning(int n, int p, const EstimatorConfig& cfg) {
  return compute_tuning(n, std::max(p, 2), cfg);
}

double pipeline_log_p(int p) { return std::log(static_cast<double>(std::max(p, 2))); }

const Eigen::VectorXd& pick_response(const IncrementSet& inc, const EstimatorConfig& cfg) {
  if (cfg.force_truncate_y) {
    if (inc.dy_trunc.size() == 0)
      throw usage_error("pipeline: truncated Y increments missing; run truncate_dependent");
    return inc.dy_trunc;
  }
  return inc.dy;
}

// The eta display is stated on the raw increment scale. On per-increment
// standardized data the equivalent penalty is eta / (sd_y sd_x) = eta * n up
// to the O(1) volatility ratio that the searched constant absorbs.
double solver_eta_from_formula(double eta_formula, int n) {
  return eta_formula * static_cast<double>(n);
}

std::vector<int> selection_windows(int window_count, int requested) {
  std::vector<int> idx;
  if (requested <= 0 || requested >= window_count) {
    idx.resize(window_count);
    for (int i = 0; i < window_count; ++i) idx[i] = i;
    return idx;
  }
  for (int i = 0; i < requested; ++i) {
    const int w = static_cast<int>(std::llround(
        static_cast<double>(i) * (window_count - 1) / std::max(1, requested - 1)));
    if (idx.empty() || idx.back() != w) idx.push_back(w);
  }
  return idx;
}

bool masked_at(const std::vector<std::pair<double, double>>& mask, double t) {
  for (const auto& [a, b] : mask) {
    if (t >= a && t < b) return true;
  }
  return false;
}

// Exact infeasibility threshold from duality: lambda is infeasible for column
// j as soon as some u in null(S) has u_j > lambda ||u||_1. The projection of
// e_j onto the null space supplies the certificate, so the largest such ratio
// over windows and columns is a sharp lower cutoff for the lambda grid.
double spectral_lambda_floor(const std::vector<Eigen::MatrixXd>& s_matrices) {
  double floor = 0.0;
  for (const Eigen::MatrixXd& s : s_matrices) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    const int p = static_cast<int>(s.rows());
    Eigen::MatrixXd null_proj = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) {
      if (ev[i] <= tol)
        null_proj += eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose();
    }
    for (int j = 0; j < p; ++j) {
      const double l1 = null_proj.col(j).lpNorm<1>();
      if (l1 > 0.0) floor = std::max(floor, null_proj(j, j) / l1);
    }
  }
  return floor;
}

}  // namespace

SpotPath compute_spot_path(const IncrementSet& std_inc, const EstimatorConfig& config) {
  const EstimatorConfig cfg = resolve_method(config);
  const int n = std_inc.n();
  const int p = std_inc.p();
  const WindowSchedule sched = make_schedule(n, cfg.k_n);
  const TuningValues tune = pipeline_tuning(n, p, cfg);
  const double tau = std::isinf(cfg.c_tau) ? std::numeric_limits<double>::infinity() : tune.tau;
  const Eigen::VectorXd& response = pick_response(std_inc, cfg);

  SpotPath path;
  path.k_n = sched.k_n;
  path.tau = tau;

  auto window_problem = [&](int m, double eta) {
    HuberLassoProblem pb;
    pb.design = std_inc.dx_trunc.middleRows(m * sched.k_n, sched.k_n);
    pb.response = response.segment(m * sched.k_n, sched.k_n);
    pb.tau = tau;
    pb.eta = eta;
    pb.window_start = m * sched.k_n;
    return pb;
  };

  if (cfg.c_eta > 0.0) {
    path.c_eta_used = cfg.c_eta;
    path.eta_solver = solver_eta_from_formula(tune.eta, n);
  } else {
    if (cfg.eta_grid.empty()) throw usage_error("pipeline: empty eta grid");
    std::vector<HuberLassoProblem> problems;
    problems.reserve(sched.count);
    for (int m = 0; m < sched.count; ++m) problems.push_back(window_problem(m, 0.0));
    const TuningValues unit = tuning_values(n, pipeline_log_p(p), cfg.c_tau, 1.0,
                                            1.0, cfg.c_varpi, cfg.c_h);
    std::vector<double> eta_candidates(cfg.eta_grid.size());
    for (std::size_t i = 0; i < cfg.eta_grid.size(); ++i)
      eta_candidates[i] = solver_eta_from_formula(cfg.eta_grid[i] * unit.eta, n);
    const GridSelection sel =
        select_eta_bic_scored(problems, eta_candidates, {cfg.kkt_tol, cfg.max_iter});
    path.eta_solver = sel.chosen;
    path.c_eta_used = cfg.eta_grid[sel.chosen_index];
  }

  SolveOptions opts{cfg.kkt_tol, cfg.max_iter};
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
  path.beta_std.reserve(sched.count);
  path.diag.reserve(sched.count);
  for (int m = 0; m < sched.count; ++m) {
    const HuberLassoProblem pb = window_problem(m, path.eta_solver);
    SpotBetaEstimate est = solve(pb, warm, opts);
    warm = est.beta;
    path.beta_std.push_back(est.beta);
    path.diag.push_back(std::move(est));
  }
  return path;
}

IntegratedBeta run_red_lasso(const IncrementSet& increments, const EstimatorConfig& config,
                             ClimeCache* cache) {
  if (config.method == Method::LASSO)
    throw usage_error("run_red_lasso: use run_lasso_baseline for the LASSO method");
  const EstimatorConfig cfg = resolve_method(config);
  const IncrementSet std_inc = standardize(increments);
  const int n = std_inc.n();
  const int p = std_inc.p();
  const WindowSchedule sched = make_schedule(n, cfg.k_n);
  const int k_n = sched.k_n;
  const int windows = sched.count;
  const double delta_n = sched.delta_n;

  IntegratedBeta out;
  out.method = config.method;
  out.response_kind = cfg.force_truncate_y ? ResponseKind::Truncated : ResponseKind::Raw;
  out.scale = std_inc.scale;
  out.k_n = k_n;
  out.n = n;
  out.p = p;

  // Step 1: spot estimates (warm-start chain keeps this sequential).
  EstimatorConfig spot_cfg = cfg;
  spot_cfg.k_n = k_n;
  const SpotPath spot = compute_spot_path(std_inc, spot_cfg);
  out.eta_solver = spot.eta_solver;
  out.c_eta_used = spot.c_eta_used;
  out.tuning = pipeline_tuning(n, p, cfg);
  const double varpi =
      std::isinf(cfg.c_varpi) ? std::numeric_limits<double>::infinity() : out.tuning.varpi;

  // Step 2 needs lambda; select it on the covariate windows when unset.
  std::vector<Eigen::MatrixXd> s_matrices(windows);
  for (int m = 0; m < windows; ++m) {
    const Eigen::MatrixXd xw = std_inc.dx_trunc.middleRows(m * k_n, k_n);
    s_matrices[m] = (xw.transpose() * xw) / (k_n * delta_n);
  }

  std::vector<Eigen::MatrixXd> omegas(windows);
  std::vector<int> clime_bad(windows, -1);
  auto solve_all_windows = [&](double lambda) {
    int failed_windows = 0;
    parallel_for(static_cast<std::size_t>(windows), cfg.threads, [&](std::size_t m) {
      try {
        ClimeOptions copts;
        copts.threads = 1;
        omegas[m] = solve_clime({s_matrices[m], lambda}, copts).omega;
        clime_bad[m] = -1;
      } catch (const clime_infeasible& e) {
        omegas[m] = Eigen::MatrixXd();
        clime_bad[m] = e.column + 1;
      } catch (const std::exception&) {
        omegas[m] = Eigen::MatrixXd();
        clime_bad[m] = 0;
      }
    });
    for (int m = 0; m < windows; ++m)
      if (clime_bad[m] >= 0) ++failed_windows;
    return failed_windows;
  };
  // Realized amplification of the precision estimates on the windows they
  // will be applied to; the trivial omega = 0 scores exactly 1.
  auto stability = [&]() {
    double g = 0.0;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    for (int m = 0; m + 1 < windows; ++m) {
      if (omegas[m].size() == 0) continue;
      g = std::max(g, (s_matrices[m + 1] * omegas[m] - eye).cwiseAbs().maxCoeff());
    }
    return g;
  };

  double lambda_used = 0.0;
  const bool cache_ok = cache && cache->filled && cache->k_n == k_n;
  if (cache_ok) {
    lambda_used = cache->lambda;
    out.c_lambda_used = cache->c_lambda;
    omegas = cache->omega;
    clime_bad = cache->bad_column;
  } else if (cfg.c_lambda > 0.0) {
    out.c_lambda_used = cfg.c_lambda;
    lambda_used = out.tuning.lambda;
    solve_all_windows(lambda_used);
  } else {
    if (cfg.lambda_grid.empty()) throw usage_error("pipeline: empty lambda grid");
    const TuningValues unit = tuning_values(n, pipeline_log_p(p), cfg.c_tau, 1.0,
                                            1.0, cfg.c_varpi, cfg.c_h);
    // Grid values certified infeasible on some window are skipped up front.
    const double floor = spectral_lambda_floor(s_matrices);
    std::vector<double> candidates;
    std::vector<std::size_t> candidate_index;
    for (std::size_t i = 0; i < cfg.lambda_grid.size(); ++i) {
      const double lambda = cfg.lambda_grid[i] * unit.lambda;
      if (lambda > floor) {
        candidates.push_back(lambda);
        candidate_index.push_back(i);
      }
    }
    if (candidates.empty())
      throw numerical_error("pipeline: every lambda grid value is infeasible");

    std::vector<ClimeProblem> problems;
    for (int w : selection_windows(windows, cfg.lambda_select_windows))
      problems.push_back({s_matrices[w], 1.0});
    const GridSelection sel = select_lambda_scored(problems, candidates, cfg.threads);

    // The trace loss degenerates toward the smallest feasible level, where the
    // solution can be wildly ill-conditioned on out-of-subset windows. Walk up
    // the grid until every window is feasible and a stability condition holds:
    // either one grid step of slack above the rank-deficiency floor, or the
    // realized next-window residual within the cap (covers full-rank windows,
    // where the floor is zero). Fall back to the best value seen.
    double grid_ratio = 1.0;
    for (std::size_t i = 1; i < cfg.lambda_grid.size(); ++i) {
      const double r = cfg.lambda_grid[i] / cfg.lambda_grid[i - 1];
      if (r > 1.0) grid_ratio = grid_ratio == 1.0 ? r : std::min(grid_ratio, r);
    }
    bool accepted = false;
    std::size_t best_g = sel.chosen_index;
    double best_guard = std::numeric_limits<double>::infinity();
    for (std::size_t g = sel.chosen_index; g < candidates.size(); ++g) {
      if (g > sel.chosen_index && !sel.feasible[g]) continue;
      lambda_used = candidates[g];
      out.c_lambda_used = cfg.lambda_grid[candidate_index[g]];
      const int failed = solve_all_windows(lambda_used);
      const bool slack_ok = floor > 0.0 && lambda_used >= floor * grid_ratio;
      const bool guard_ok = cfg.clime_stability_cap <= 0.0 ||
                            stability() <= cfg.clime_stability_cap;
      if (failed == 0 && (slack_ok || guard_ok)) {
        accepted = true;
        break;
      }
      const double score = failed > 0 ? std::numeric_limits<double>::infinity() : stability();
      if (score < best_guard) {
        best_guard = score;
        best_g = g;
      }
    }
    if (!accepted) {
      lambda_used = candidates[best_g];
      out.c_lambda_used = cfg.lambda_grid[candidate_index[best_g]];
      solve_all_windows(lambda_used);
    }
  }
  if (cache && !cache_ok) {
    cache->lambda = lambda_used;
    cache->c_lambda = out.c_lambda_used;
    cache->k_n = k_n;
    cache->omega = omegas;
    cache->bad_column = clime_bad;
    cache->filled = true;
  }
  out.lambda_used = lambda_used;
  // Echo the tuning values at the constants actually in effect.
  if (cfg.c_eta <= 0.0) out.tuning.eta *= out.c_eta_used;
  out.tuning.lambda = lambda_used;

  // Steps 3-5.
  const Eigen::VectorXd& response = pick_response(std_inc, cfg);
  std::vector<Eigen::VectorXd> beta_hat(windows), beta_tilde(windows);
  out.diagnostics.resize(windows);
  out.window_times.resize(windows);
  for (int m = 0; m < windows; ++m) {
    WindowDiag& diag = out.diagnostics[m];
    diag.index = m;
    diag.t = m * k_n * delta_n;
    out.window_times[m] = diag.t;
    diag.solver_converged = spot.diag[m].converged;
    diag.solver_iterations = spot.diag[m].iterations;
    diag.kkt_gap = spot.diag[m].kkt_gap;
    diag.clime_ok = omegas[m].size() > 0;
    diag.clime_bad_column = clime_bad[m];

    const bool failed = !diag.solver_converged || !diag.clime_ok;
    if (failed) {
      diag.carried_forward = true;
      if (m == 0) {
        beta_hat[m] = spot.beta_std[m];
        beta_tilde[m] = spot.beta_std[m];  // no usable correction for the first window
      } else {
        beta_hat[m] = beta_hat[m - 1];
        beta_tilde[m] = beta_tilde[m - 1];
      }
    } else {
      beta_hat[m] = spot.beta_std[m];
      const Eigen::MatrixXd design_next = std_inc.dx_trunc.middleRows((m + 1) * k_n, k_n);
      const Eigen::VectorXd response_next = response.segment((m + 1) * k_n, k_n);
      beta_tilde[m] =
          debias_spot(beta_hat[m], omegas[m], design_next, response_next, k_n, delta_n, varpi);
    }

    if (masked_at(cfg.zero_mask, diag.t)) {
      diag.masked = true;
      beta_hat[m].setZero();
      beta_tilde[m].setZero();
    }
  }

  const Eigen::VectorXd integrated_std = integrate(beta_tilde, k_n, delta_n);
  const Eigen::VectorXd naive_std = integrate(beta_hat, k_n, delta_n);
  const Eigen::VectorXd thresholded_std = threshold(integrated_std, out.tuning.h_n,
                                                    cfg.threshold_rule);

  out.debiased_std = integrated_std;
  out.debiased = rescale_beta(integrated_std, std_inc.scale, out.response_kind);
  out.naive = rescale_beta(naive_std, std_inc.scale, out.response_kind);
  out.thresholded = rescale_beta(thresholded_std, std_inc.scale, out.response_kind);

  out.spot_hat.resize(windows, p);
  out.spot_debiased.resize(windows, p);
  for (int m = 0; m < windows; ++m) {
    out.spot_hat.row(m) = rescale_beta(beta_hat[m], std_inc.scale, out.response_kind).transpose();
    out.spot_debiased.row(m) =
        rescale_beta(beta_tilde[m], std_inc.scale, out.response_kind).transpose();
  }
  return out;
}

Eigen::VectorXd run_lasso_baseline(const IncrementSet& increments, double eta_lasso) {
  if (!(eta_lasso >= 0.0)) throw usage_error("run_lasso_baseline: eta must be >= 0");
  const IncrementSet std_inc = standardize(increments);
  if (std_inc.dy_trunc.size() == 0)
    throw usage_error("run_lasso_baseline: truncated Y increments missing");
  const int n = std_inc.n();

  HuberLassoProblem pb;
  pb.design = std_inc.dx_trunc;
  pb.response = std_inc.dy_trunc;
  pb.tau = std::numeric_limits<double>::infinity();
  // sum r^2 + eta ||beta||_1 == 2n * [ (1/n) sum r^2/2 + eta/(2n) ||beta||_1 ]
  pb.eta = eta_lasso / (2.0 * n);
  const SpotBetaEstimate est = solve(pb, Eigen::VectorXd::Zero(std_inc.p()), {1e-8, 20000});
  return rescale_beta(est.beta, std_inc.scale, ResponseKind::Truncated);
}

LassoBaseline run_lasso_baseline_bic(const IncrementSet& increments,
                                     const std::vector<double>& eta_grid) {
  if (eta_grid.empty()) throw usage_error("run_lasso_baseline_bic: empty grid");
  const IncrementSet std_inc = standardize(increments);
  const int n = std_inc.n();

  HuberLassoProblem pb;
  pb.design = std_inc.dx_trunc;
  pb.response = std_inc.dy_trunc;
  pb.tau = std::numeric_limits<double>::infinity();

  std::vector<double> solver_grid(eta_grid.size());
  for (std::size_t i = 0; i < eta_grid.size(); ++i) solver_grid[i] = eta_grid[i] / (2.0 * n);
  const GridSelection sel = select_eta_bic_scored({pb}, solver_grid, {1e-8, 20000});

  LassoBaseline out;
  out.eta_lasso = eta_grid[sel.chosen_index];
  out.beta = run_lasso_baseline(increments, out.eta_lasso);
  return out;
}

}  // namespace betaflow
