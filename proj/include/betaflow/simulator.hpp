#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "betaflow/preprocessing.hpp"

namespace betaflow {

// Ornstein-Uhlenbeck parameters: dx = mean_reversion * (long_run_mean - x) dt + vol dW.
struct OUParams {
  double mean_reversion = 1.0;
  double long_run_mean = 0.0;
  double vol = 0.0;
  double init = 0.0;
};

struct SimConfig {
  int p = 100;
  int n_all = 4000;      // generation grid size
  int n = 1000;          // observation grid size, must divide n_all
  double s_p = 0.0;      // sparsity level; <= 0 means log(p)
  double df = 2.0;       // t degrees of freedom for jump sizes and vol multipliers; inf = Gaussian
  double jump_intensity_x = 20.0;
  double jump_intensity_y = 10.0;
  double jump_scale = 0.1;
  double rho = 0.8;      // Sigma_ij(t) = u(t) * rho^|i-j|
  std::uint64_t seed = 1;

  double mu_beta = 0.1;  // drift of the active coefficients
  double beta_init = 1.0;
  OUParams ou_nu{3.0, 0.4, 0.12, 0.5};
  OUParams ou_u{5.0, 0.45, 0.2, 1.0};
  OUParams ou_xi{3.0, 0.3, 0.1, 0.15};

  double resolved_s_p() const;
  int active_count() const;  // floor(resolved_s_p()), clamped to [0, p]
};

// Throws usage_error when an invariant is violated (n_all % n != 0, df <= 0, ...).
void validate(const SimConfig& config);

struct SimOutput {
  LogPricePanel panel;                   // observed grid, n+1 rows
  Eigen::MatrixXd true_spot_beta;        // (n_all+1) x p on the generation grid
  Eigen::VectorXd true_integrated_beta;  // trapezoidal integral of the spot path
  std::vector<std::vector<double>> x_jump_times;  // per covariate, arrival times in (0,1]
  std::vector<double> y_jump_times;
  SimConfig config;
};

// Euler path of an OU process on a uniform grid with step h; noise holds the
// standard-normal increments, one per step. Returns a path of length
// noise.size() + 1 with path[0] = params.init.
Eigen::VectorXd simulate_ou(const OUParams& params, double h, const Eigen::VectorXd& noise);

// Per-step Cholesky factor of Sigma(t) = u(t) * T, T_ij = rho^|i-j|.
// T is time-invariant, so the factor is sqrt(u(t)) * chol(T) with chol(T)
// computed once. u is clamped at a small positive floor before the sqrt.
struct CovariancePath {
  Eigen::MatrixXd chol_corr;  // lower-triangular chol(T)
  Eigen::VectorXd sqrt_u;     // one entry per grid point
};
CovariancePath simulate_covariance_path(const SimConfig& config, const Eigen::VectorXd& u_path);

SimOutput simulate_paths(const SimConfig& config);

}  // namespace betaflow
