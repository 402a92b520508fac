#pragma once

#include <Eigen/Dense>

namespace betaflow {

// Huber loss: x^2/2 inside [-tau, tau], linear tails tau|x| - tau^2/2.
// tau = +inf gives the squared loss x^2/2. Throws usage_error for tau <= 0.
double huber_loss(double x, double tau);

// Derivative of huber_loss: x clipped to [-tau, tau] (winsorization).
double huber_grad(double x, double tau);

// One window of the local l1-penalized Huber regression:
//   min_beta  (1/k_n) sum_h l_tau(y_h - x_h' beta) + eta ||beta||_1
struct HuberLassoProblem {
  Eigen::MatrixXd design;    // k_n x p
  Eigen::VectorXd response;  // k_n
  double tau = 1.0;          // > 0 or +inf
  double eta = 0.0;          // >= 0
  int window_start = 0;      // increment index of the first row (diagnostic)

  int k_n() const { return static_cast<int>(design.rows()); }
  int p() const { return static_cast<int>(design.cols()); }
};

struct SpotBetaEstimate {
  Eigen::VectorXd beta;
  double objective = 0.0;
  int iterations = 0;
  double kkt_gap = 0.0;
  bool converged = false;
};

struct SolveOptions {
  double kkt_tol = 1e-7;
  int max_iter = 10000;
};

double objective_value(const HuberLassoProblem& problem, const Eigen::VectorXd& beta);

// Gradient of the smooth part: -(1/k_n) X' psi_tau(y - X beta).
Eigen::VectorXd smooth_gradient(const HuberLassoProblem& problem, const Eigen::VectorXd& beta);

// Max-norm KKT residual of the full objective at beta.
double kkt_gap(const HuberLassoProblem& problem, const Eigen::VectorXd& beta);

// Monotone FISTA with backtracking on the smooth curvature and a soft-threshold
// proximal step. Returns the best iterate when max_iter is hit (converged=false).
SpotBetaEstimate solve(const HuberLassoProblem& problem, const Eigen::VectorXd& init,
                       const SolveOptions& options = {});

}  // namespace betaflow
