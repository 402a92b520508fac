#pragma once

#include <Eigen/Dense>
#include <functional>

namespace betaflow {

// Dense Mehrotra predictor-corrector solver for standard-form LPs
//   min c'x  s.t.  Ax = b, x >= 0.
// The operator form lets callers exploit constraint structure when assembling
// the normal matrix A diag(d) A'.
struct LpOperator {
  int rows = 0;  // m
  int cols = 0;  // n
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;        // A v
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_t;      // A' w
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> normal;       // A diag(d) A'
  Eigen::MatrixXd aat;                                                 // A A'
};

enum class LpStatus { Optimal, MaxIterations, NumericalTrouble };

struct LpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  double objective = 0.0;
  int iterations = 0;
  LpStatus status = LpStatus::NumericalTrouble;
};

struct LpOptions {
  double tol = 1e-10;
  int max_iter = 60;
};

LpResult mehrotra_solve(const LpOperator& op, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                        const LpOptions& options = {});

}  // namespace betaflow
