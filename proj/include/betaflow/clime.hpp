#pragma once

#include <Eigen/Dense>

namespace betaflow {

// Constrained l1-minimization for the inverse spot volatility matrix:
// column j solves  min ||w||_1  s.t.  || s_hat w - e_j ||_max <= lambda.
struct ClimeProblem {
  Eigen::MatrixXd s_hat;  // p x p, symmetric
  double lambda = 0.0;    // > 0
};

struct PrecisionEstimate {
  Eigen::MatrixXd omega;
  double feasibility_gap = 0.0;   // max(0, ||S omega - I||_max - lambda)
  Eigen::VectorXd l1_norms;       // per-column objective values
};

struct ClimeOptions {
  double tol = 1e-10;
  int threads = 1;
  bool symmetrize = false;  // optional min-magnitude symmetrization, off by default
};

// Throws clime_infeasible (with the offending column) when lambda is below the
// column's minimal attainable constraint level; suggests a larger lambda.
PrecisionEstimate solve_clime(const ClimeProblem& problem, const ClimeOptions& options = {});

Eigen::VectorXd solve_clime_column(const Eigen::MatrixXd& s_hat, int column, double lambda,
                                   double tol = 1e-10);

// Exact minimal feasible constraint level for one column:
// min_w || s_hat w - e_j ||_max, itself a small LP.
double min_feasible_lambda(const Eigen::MatrixXd& s_hat, int column);

}  // namespace betaflow
