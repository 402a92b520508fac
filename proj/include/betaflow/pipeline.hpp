#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "betaflow/huber_lasso.hpp"
#include "betaflow/preprocessing.hpp"

namespace betaflow {

enum class Method { RED, ED, LASSO };
enum class ThresholdRule { Hard, Soft };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Geometric 13-point grid spanning [0.1, 10] for the searched constants.
std::vector<double> default_constant_grid();

struct EstimatorConfig {
  Method method = Method::RED;
  int k_n = 0;  // 0 -> floor(sqrt(n))

  double c_tau = 16.0;
  double c_eta = 0.0;     // <= 0: BIC-selected over eta_grid
  double c_lambda = 0.0;  // <= 0: trace-loss-selected over lambda_grid
  double c_varpi = 1.0 / 64.0;
  double c_h = 0.25;
  std::vector<double> eta_grid = default_constant_grid();
  std::vector<double> lambda_grid = default_constant_grid();

  ThresholdRule threshold_rule = ThresholdRule::Hard;
  bool force_truncate_y = false;  // regress on jump-truncated Y even under RED

  // Theoretical winsorization level c_varpi * s_p^(2-delta) n^(delta/4)
  // (log p)^((1-3 delta)/4) instead of the practical c_varpi (log p)^(1/4).
  bool theoretical_varpi = false;
  double varpi_s_p = 1.0;
  double varpi_delta = 0.0;

  int lambda_select_windows = 0;  // 0 = use every window during selection
  // Accept a selected lambda only while the realized next-window residual
  // max_m ||S_{m+1} omega_m - I||_max stays below this multiple of the trivial
  // omega = 0 residual (which scores exactly 1); 0 disables the guard.
  double clime_stability_cap = 3.0;
  int threads = 0;
  double kkt_tol = 1e-7;
  int max_iter = 10000;

  // Non-trading intervals [a, b): spot estimates there are set to zero.
  std::vector<std::pair<double, double>> zero_mask;
};

struct TuningValues {
  double tau = 0.0;
  double eta = 0.0;
  double lambda = 0.0;
  double varpi = 0.0;
  double h_n = 0.0;
};

// The five scalars of the tuning display, with log p supplied directly.
TuningValues tuning_values(int n, double log_p, double c_tau, double c_eta, double c_lambda,
                           double c_varpi, double c_h);

// Same with log_p = log(p); unset (<= 0) c_eta / c_lambda count as 1.
TuningValues compute_tuning(int n, int p, const EstimatorConfig& config);

// Entrywise clip to [-varpi, varpi]; varpi = +inf is the identity.
Eigen::VectorXd winsorize_vector(const Eigen::VectorXd& v, double varpi);

// One debiasing step on the disjoint follow-up window:
// beta_tilde = beta_hat + psi_varpi( Omega' X_next' (y_next - X_next beta_hat) / (k_n delta_n) ).
Eigen::VectorXd debias_spot(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& omega_hat,
                            const Eigen::MatrixXd& design_next, const Eigen::VectorXd& response_next,
                            int k_n, double delta_n, double varpi);

// Riemann sum of the first floor(1/(k_n delta_n)) - 1 spot vectors, each
// weighted k_n delta_n.
Eigen::VectorXd integrate(const std::vector<Eigen::VectorXd>& spots, int k_n, double delta_n);

Eigen::VectorXd threshold(const Eigen::VectorXd& i_beta, double h_n, ThresholdRule rule);

struct WindowDiag {
  int index = 0;
  double t = 0.0;
  bool solver_converged = false;
  int solver_iterations = 0;
  double kkt_gap = 0.0;
  bool clime_ok = false;
  int clime_bad_column = -1;  // 1-based column when CLIME reported infeasibility
  bool carried_forward = false;
  bool masked = false;
};

struct IntegratedBeta {
  Eigen::VectorXd debiased;     // raw units
  Eigen::VectorXd thresholded;  // raw units
  Eigen::VectorXd naive;        // plain Riemann sum of the spot estimates, raw units

  Eigen::VectorXd debiased_std;  // standardized-space integrated estimate (pre-threshold)
  Eigen::MatrixXd spot_hat;      // windows x p, raw units
  Eigen::MatrixXd spot_debiased;
  Eigen::VectorXd window_times;

  std::vector<WindowDiag> diagnostics;
  TuningValues tuning;
  double eta_solver = 0.0;  // penalty actually handed to the window solver
  double c_eta_used = 0.0;
  double c_lambda_used = 0.0;
  double lambda_used = 0.0;
  Method method = Method::RED;
  ResponseKind response_kind = ResponseKind::Raw;
  ScaleInfo scale;
  int k_n = 0;
  int n = 0;
  int p = 0;
};

// Per-window precision matrices shared between estimator variants that run on
// the same covariate windows (the matrices depend only on X and lambda).
struct ClimeCache {
  double lambda = 0.0;
  double c_lambda = 0.0;
  int k_n = 0;
  std::vector<Eigen::MatrixXd> omega;  // empty matrix marks a failed window
  std::vector<int> bad_column;
  bool filled = false;
};

// Steps 1-5 on truncated increments; standardizes internally when needed and
// maps every output back to raw units. method must be RED or ED.
IntegratedBeta run_red_lasso(const IncrementSet& increments, const EstimatorConfig& config,
                             ClimeCache* cache = nullptr);

// Global least-squares LASSO baseline on jump-truncated increments:
// argmin sum_i (dy_i - dx_i' beta)^2 + eta_lasso ||beta||_1, reported in raw units.
Eigen::VectorXd run_lasso_baseline(const IncrementSet& increments, double eta_lasso);

struct LassoBaseline {
  Eigen::VectorXd beta;
  double eta_lasso = 0.0;
};
LassoBaseline run_lasso_baseline_bic(const IncrementSet& increments,
                                     const std::vector<double>& eta_grid);

// Warm-start chained spot estimates over the window schedule (Step 1 only).
struct SpotPath {
  std::vector<Eigen::VectorXd> beta_std;
  std::vector<SpotBetaEstimate> diag;
  double eta_solver = 0.0;
  double c_eta_used = 0.0;
  double tau = 0.0;
  int k_n = 0;
};
SpotPath compute_spot_path(const IncrementSet& std_increments, const EstimatorConfig& config);

// Window schedule shared by the pipeline stages: spot windows start at
// multiples of k_n and each needs the disjoint follow-up block inside [0, n].
struct WindowSchedule {
  int k_n = 0;
  int count = 0;  // floor(n / k_n) - 1 spot estimates
  double delta_n = 0.0;
};
WindowSchedule make_schedule(int n, int k_n_request);

}  // namespace betaflow
