#pragma once

// Test-only reference implementations, kept deliberately independent of the
// production solvers they cross-check.

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace testref {

// Dense two-phase tableau simplex with Bland's rule for
//   min c'x  s.t.  Ax <= b, x >= 0.
struct SimplexResult {
  enum class Status { Optimal, Infeasible, Unbounded } status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};
SimplexResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& c);

// CLIME column via the simplex oracle on the w = w+ - w- split.
struct ClimeColumnOracle {
  bool feasible = false;
  Eigen::VectorXd omega_col;
  double objective = 0.0;
};
ClimeColumnOracle clime_column_oracle(const Eigen::MatrixXd& s, int column, double lambda);

// Cyclic coordinate descent for (1/k) sum l_tau(y - X beta) + eta ||beta||_1
// with exact scalar minimization per coordinate (monotone subgradient
// bisection). Run to a much tighter tolerance than the production solver.
Eigen::VectorXd cd_huber_lasso_reference(const Eigen::MatrixXd& design,
                                         const Eigen::VectorXd& response, double tau, double eta,
                                         int max_cycles = 20000, double tol = 1e-12);

}  // namespace testref
