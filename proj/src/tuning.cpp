#include "betaflow/tuning.hpp"

#include <cmath>
#include <limits>

#include "betaflow/errors.hpp"
#include "betaflow/parallel.hpp"

namespace betaflow {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double window_bic(const HuberLassoProblem& pb, const SpotBetaEstimate& est) {
  const double k = static_cast<double>(pb.k_n());
  const Eigen::VectorXd residual = pb.response - pb.design * est.beta;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) loss += huber_loss(residual[i], pb.tau);
  loss /= k;
  const int df = static_cast<int>((est.beta.array() != 0.0).count());
  return k * std::log(std::max(2.0 * loss, 1e-300)) + df * std::log(k);
}
}  // namespace

GridSelection select_eta_bic_scored(const std::vector<HuberLassoProblem>& window_problems,
                                    const std::vector<double>& grid,
                                    const SolveOptions& options) {
  if (grid.empty()) throw usage_error("select_eta_bic: empty grid");
  if (window_problems.empty()) throw usage_error("select_eta_bic: no window problems");

  GridSelection sel;
  sel.scores.assign(grid.size(), kNaN);
  sel.feasible.assign(grid.size(), 0);

  for (std::size_t g = 0; g < grid.size(); ++g) {
    double bic = 0.0;
    bool all_converged = true;
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(window_problems.front().p());
    for (const HuberLassoProblem& base : window_problems) {
      HuberLassoProblem pb = base;
      pb.eta = grid[g];
      const SpotBetaEstimate est = solve(pb, warm, options);
      if (!est.converged) {
        all_converged = false;
        break;
      }
      warm = est.beta;
      bic += window_bic(pb, est);
    }
    if (!all_converged) continue;
    sel.scores[g] = bic;
    sel.feasible[g] = 1;
  }

  bool found = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!sel.feasible[g]) continue;
    if (!found || sel.scores[g] < sel.scores[sel.chosen_index]) {
      sel.chosen_index = g;
      found = true;
    }
  }
  if (!found) throw numerical_error("select_eta_bic: no grid point produced converged solves");
  sel.chosen = grid[sel.chosen_index];
  return sel;
}

double select_eta_bic(const std::vector<HuberLassoProblem>& window_problems,
                      const std::vector<double>& grid, const SolveOptions& options) {
  return select_eta_bic_scored(window_problems, grid, options).chosen;
}

GridSelection select_lambda_scored(const std::vector<ClimeProblem>& window_matrices,
                                   const std::vector<double>& grid, int threads) {
  if (grid.empty()) throw usage_error("select_lambda: empty grid");
  if (window_matrices.empty()) throw usage_error("select_lambda: no window matrices");

  GridSelection sel;
  sel.scores.assign(grid.size(), kNaN);
  sel.feasible.assign(grid.size(), 0);

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double lambda = grid[g];
    double loss = 0.0;
    bool ok = true;
    for (const ClimeProblem& base : window_matrices) {
      try {
        ClimeOptions copts;
        copts.threads = threads;
        const PrecisionEstimate est = solve_clime({base.s_hat, lambda}, copts);
        const Eigen::MatrixXd m = base.s_hat * est.omega -
                                  Eigen::MatrixXd::Identity(base.s_hat.rows(), base.s_hat.cols());
        loss += (m * m).trace();
      } catch (const clime_infeasible&) {
        ok = false;  // lambda too small for this window
        break;
      } catch (const numerical_error&) {
        ok = false;  // cannot score this level reliably
        break;
      }
    }
    if (!ok) continue;
    sel.scores[g] = loss;
    sel.feasible[g] = 1;
  }

  bool found = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!sel.feasible[g]) continue;
    if (!found || sel.scores[g] < sel.scores[sel.chosen_index]) {
      sel.chosen_index = g;
      found = true;
    }
  }
  if (!found) throw numerical_error("select_lambda: every grid value is infeasible");
  sel.chosen = grid[sel.chosen_index];
  return sel;
}

double select_lambda(const std::vector<ClimeProblem>& window_matrices,
                     const std::vector<double>& grid, int threads) {
  return select_lambda_scored(window_matrices, grid, threads).chosen;
}

std::vector<double> dyadic_grid(int low_exp, int high_exp) {
  std::vector<double> grid;
  for (int l = low_exp; l <= high_exp; ++l) grid.push_back(std::pow(2.0, l));
  return grid;
}

namespace {

struct PanelState {
  IncrementSet std_inc;
  WindowSchedule sched;
  int n = 0;
  int p = 0;
};

std::vector<Eigen::VectorXd> raw_path(const std::vector<Eigen::VectorXd>& std_path,
                                      const ScaleInfo& scale, ResponseKind kind) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(std_path.size());
  for (const auto& b : std_path) out.push_back(rescale_beta(b, scale, kind));
  return out;
}

double path_mspe(const std::vector<Eigen::VectorXd>& current,
                 const std::vector<Eigen::VectorXd>& reference_next) {
  double acc = 0.0;
  for (std::size_t m = 0; m + 1 < reference_next.size(); ++m)
    acc += (current[m] - reference_next[m + 1]).squaredNorm();
  return acc;
}

}  // namespace

TuningReport select_mspe_constants(const std::vector<LogPricePanel>& calibration_panels,
                                   const std::vector<double>& grid_tau,
                                   const std::vector<double>& grid_varpi,
                                   const std::vector<double>& grid_h,
                                   const EstimatorConfig& base_config) {
  if (calibration_panels.empty()) throw data_error("select_mspe_constants: no panels");
  if (calibration_panels.size() < 2)
    throw data_error("select_mspe_constants: the c_h stage needs at least 2 panels");
  if (grid_tau.empty() || grid_varpi.empty() || grid_h.empty())
    throw usage_error("select_mspe_constants: empty grid");

  const std::size_t n_panels = calibration_panels.size();
  std::vector<PanelState> states(n_panels);
  for (std::size_t s = 0; s < n_panels; ++s) {
    states[s].std_inc = standardize(make_increments(calibration_panels[s]));
    states[s].n = states[s].std_inc.n();
    states[s].p = states[s].std_inc.p();
    states[s].sched = make_schedule(states[s].n, base_config.k_n);
    if (states[s].p != states[0].p)
      throw data_error("select_mspe_constants: panels disagree on covariate count");
  }

  TuningReport report;
  const ResponseKind kind =
      base_config.force_truncate_y ? ResponseKind::Truncated : ResponseKind::Raw;

  // Stage 1: c_tau against the next-window non-robust spot estimates. The
  // infinite-tau reference regresses on jump-truncated Y.
  std::vector<std::vector<Eigen::VectorXd>> reference(n_panels);
  for (std::size_t s = 0; s < n_panels; ++s) {
    EstimatorConfig ref_cfg = base_config;
    ref_cfg.c_tau = std::numeric_limits<double>::infinity();
    ref_cfg.force_truncate_y = true;
    const SpotPath path = compute_spot_path(states[s].std_inc, ref_cfg);
    reference[s] = raw_path(path.beta_std, states[s].std_inc.scale, ResponseKind::Truncated);
  }

  std::vector<std::pair<double, double>> tau_scores;
  double c_tau = grid_tau.front();
  double best = std::numeric_limits<double>::infinity();
  for (double c : grid_tau) {
    EstimatorConfig cfg = base_config;
    cfg.c_tau = c;
    double loss = 0.0;
    for (std::size_t s = 0; s < n_panels; ++s) {
      const SpotPath path = compute_spot_path(states[s].std_inc, cfg);
      loss += path_mspe(raw_path(path.beta_std, states[s].std_inc.scale, kind), reference[s]);
    }
    loss /= static_cast<double>(n_panels);
    tau_scores.emplace_back(c, loss);
    if (loss < best) {
      best = loss;
      c_tau = c;
    }
  }
  report.chosen["c_tau"] = c_tau;
  report.criterion["c_tau"] = "mspe";
  report.grid_scores["c_tau"] = tau_scores;

  // Stage 2: c_varpi against the next-window spot estimates at the chosen
  // c_tau. Precision matrices do not depend on varpi, so cache them per panel.
  std::vector<SpotPath> spot_at_tau(n_panels);
  std::vector<std::vector<Eigen::MatrixXd>> omegas(n_panels);
  for (std::size_t s = 0; s < n_panels; ++s) {
    EstimatorConfig cfg = base_config;
    cfg.c_tau = c_tau;
    spot_at_tau[s] = compute_spot_path(states[s].std_inc, cfg);

    const PanelState& st = states[s];
    auto s_matrix = [&](int m) {
      const Eigen::MatrixXd xw = st.std_inc.dx_trunc.middleRows(m * st.sched.k_n, st.sched.k_n);
      return Eigen::MatrixXd((xw.transpose() * xw) / (st.sched.k_n * st.sched.delta_n));
    };
    double lambda = 0.0;
    if (base_config.c_lambda > 0.0) {
      lambda = compute_tuning(st.n, st.p, cfg).lambda;
    } else {
      std::vector<ClimeProblem> problems;
      for (int w = 0; w < st.sched.count; ++w)
        if (base_config.lambda_select_windows <= 0 ||
            w % std::max(1, st.sched.count / std::max(1, base_config.lambda_select_windows)) == 0)
          problems.push_back({s_matrix(w), 1.0});
      const TuningValues unit = tuning_values(st.n, std::log(static_cast<double>(st.p)),
                                              base_config.c_tau, 1.0, 1.0, base_config.c_varpi,
                                              base_config.c_h);
      std::vector<double> grid(base_config.lambda_grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = base_config.lambda_grid[i] * unit.lambda;
      lambda = select_lambda_scored(problems, grid, base_config.threads).chosen;
    }
    omegas[s].resize(st.sched.count);
    parallel_for(static_cast<std::size_t>(st.sched.count), base_config.threads,
                 [&](std::size_t m) {
                   try {
                     ClimeOptions copts;
                     copts.threads = 1;
                     omegas[s][m] = solve_clime({s_matrix(static_cast<int>(m)), lambda}, copts).omega;
                   } catch (const std::exception&) {
                     // skipped below
                   }
                 });
  }

  std::vector<std::pair<double, double>> varpi_scores;
  double c_varpi = grid_varpi.front();
  best = std::numeric_limits<double>::infinity();
  for (double c : grid_varpi) {
    double loss = 0.0;
    for (std::size_t s = 0; s < n_panels; ++s) {
      const PanelState& st = states[s];
      const double varpi = c * std::pow(std::log(static_cast<double>(st.p)), 0.25);
      const Eigen::VectorXd& response =
          base_config.force_truncate_y ? st.std_inc.dy_trunc : st.std_inc.dy;
      const auto spot_raw = raw_path(spot_at_tau[s].beta_std, st.std_inc.scale, kind);
      for (int m = 0; m + 1 < st.sched.count; ++m) {
        if (omegas[s][m].size() == 0) continue;
        const Eigen::MatrixXd design_next =
            st.std_inc.dx_trunc.middleRows((m + 1) * st.sched.k_n, st.sched.k_n);
        const Eigen::VectorXd response_next =
            response.segment((m + 1) * st.sched.k_n, st.sched.k_n);
        const Eigen::VectorXd tilde =
            debias_spot(spot_at_tau[s].beta_std[m], omegas[s][m], design_next, response_next,
                        st.sched.k_n, st.sched.delta_n, varpi);
        loss += (rescale_beta(tilde, st.std_inc.scale, kind) - spot_raw[m + 1]).squaredNorm();
      }
    }
    loss /= static_cast<double>(n_panels);
    varpi_scores.emplace_back(c, loss);
    if (loss < best) {
      best = loss;
      c_varpi = c;
    }
  }
  report.chosen["c_varpi"] = c_varpi;
  report.criterion["c_varpi"] = "mspe";
  report.grid_scores["c_varpi"] = varpi_scores;

  // Stage 3: c_h against the next panel's debiased integrated estimate.
  std::vector<IntegratedBeta> full(n_panels);
  for (std::size_t s = 0; s < n_panels; ++s) {
    EstimatorConfig cfg = base_config;
    cfg.c_tau = c_tau;
    cfg.c_varpi = c_varpi;
    full[s] = run_red_lasso(states[s].std_inc, cfg);
  }

  std::vector<std::pair<double, double>> h_scores;
  double c_h = grid_h.front();
  best = std::numeric_limits<double>::infinity();
  for (double c : grid_h) {
    double loss = 0.0;
    for (std::size_t s = 0; s + 1 < n_panels; ++s) {
      const PanelState& st = states[s];
      const double h_n = c * std::pow(static_cast<double>(st.n), -0.5) *
                         std::pow(std::log(static_cast<double>(st.p)), 1.5);
      const Eigen::VectorXd thresholded = rescale_beta(
          threshold(full[s].debiased_std, h_n, base_config.threshold_rule), st.std_inc.scale, kind);
      loss += (thresholded - full[s + 1].debiased).squaredNorm();
    }
    loss /= static_cast<double>(n_panels - 1);
    h_scores.emplace_back(c, loss);
    if (loss < best) {
      best = loss;
      c_h = c;
    }
  }
  report.chosen["c_h"] = c_h;
  report.criterion["c_h"] = "mspe";
  report.grid_scores["c_h"] = h_scores;
  return report;
}

}  // namespace betaflow
