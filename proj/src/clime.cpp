#include "betaflow/clime.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <string>

#include "betaflow/errors.hpp"
#include "betaflow/ipm.hpp"
#include "betaflow/parallel.hpp"

namespace betaflow {

namespace {

void check_problem(const ClimeProblem& pb) {
  const auto p = pb.s_hat.rows();
  if (p < 1 || pb.s_hat.cols() != p) throw usage_error("clime: s_hat must be square");
  if (!(pb.lambda > 0.0)) throw usage_error("clime: lambda must be positive");
  const double asym = (pb.s_hat - pb.s_hat.transpose()).lpNorm<Eigen::Infinity>();
  if (asym > 1e-10 * (1.0 + pb.s_hat.lpNorm<Eigen::Infinity>()))
    throw usage_error("clime: s_hat is not symmetric");
}

// Column LP in standard form with x = [w+; w-; s+; s-]:
//   A = [ S  -S  I  0 ]   b = [ e_j + lambda ]
//       [-S   S  0  I ]       [-e_j + lambda ]
LpOperator column_operator(const Eigen::MatrixXd& s) {
  const int p = static_cast<int>(s.rows());
  LpOperator op;
  op.rows = 2 * p;
  op.cols = 4 * p;
  op.apply = [&s, p](const Eigen::VectorXd& v) {
    const Eigen::VectorXd sw = s * (v.segment(0, p) - v.segment(p, p));
    Eigen::VectorXd out(2 * p);
    out.head(p) = sw + v.segment(2 * p, p);
    out.tail(p) = -sw + v.segment(3 * p, p);
    return out;
  };
  op.apply_t = [&s, p](const Eigen::VectorXd& w) {
    const Eigen::VectorXd st = s.transpose() * (w.head(p) - w.tail(p));
    Eigen::VectorXd out(4 * p);
    out.segment(0, p) = st;
    out.segment(p, p) = -st;
    out.segment(2 * p, p) = w.head(p);
    out.segment(3 * p, p) = w.tail(p);
    return out;
  };
  op.normal = [&s, p](const Eigen::VectorXd& d) {
    const Eigen::VectorXd dw = d.segment(0, p) + d.segment(p, p);
    const Eigen::MatrixXd b = s * dw.asDiagonal() * s.transpose();
    Eigen::MatrixXd m(2 * p, 2 * p);
    m.topLeftCorner(p, p) = b;
    m.topLeftCorner(p, p).diagonal() += d.segment(2 * p, p);
    m.topRightCorner(p, p) = -b;
    m.bottomLeftCorner(p, p) = -b;
    m.bottomRightCorner(p, p) = b;
    m.bottomRightCorner(p, p).diagonal() += d.segment(3 * p, p);
    return m;
  };
  const Eigen::MatrixXd g = s * s.transpose();
  op.aat.resize(2 * p, 2 * p);
  op.aat.topLeftCorner(p, p) = 2.0 * g;
  op.aat.topLeftCorner(p, p).diagonal().array() += 1.0;
  op.aat.topRightCorner(p, p) = -2.0 * g;
  op.aat.bottomLeftCorner(p, p) = -2.0 * g;
  op.aat.bottomRightCorner(p, p) = 2.0 * g;
  op.aat.bottomRightCorner(p, p).diagonal().array() += 1.0;
  return op;
}

// By LP duality the column problem is infeasible at level lambda exactly when
// some u in null(S) has u_j > lambda ||u||_1. A diverging dual iterate runs
// along such a ray, so u = y1 - y2 from the failed solve certifies it.
bool certifies_infeasible(const Eigen::MatrixXd& s, int column, double lambda,
                          const Eigen::VectorXd& y) {
  const int p = static_cast<int>(s.rows());
  Eigen::VectorXd u = y.head(p) - y.tail(p);
  const double norm1 = u.lpNorm<1>();
  if (!(norm1 > 0.0)) return false;
  u /= norm1;
  const double null_violation = (s.transpose() * u).lpNorm<Eigen::Infinity>();
  return null_violation <= 1e-7 && u[column] > lambda + 1e-9;
}

}  // namespace

Eigen::VectorXd solve_clime_column(const Eigen::MatrixXd& s_hat, int column, double lambda,
                                   double tol) {
  const int p = static_cast<int>(s_hat.rows());
  // The constraint is invariant under S -> S/s, omega -> s * omega, so solve
  // on a unit-scaled matrix and map back.
  const double s_scale = s_hat.cwiseAbs().maxCoeff();
  if (!(s_scale > 0.0)) {
    if (lambda >= 1.0) return Eigen::VectorXd::Zero(p);
    throw clime_infeasible(column, "clime: zero matrix is infeasible below lambda=1");
  }
  const Eigen::MatrixXd s = s_hat / s_scale;

  const LpOperator op = column_operator(s);
  Eigen::VectorXd b(2 * p);
  b.setConstant(lambda);
  b[column] += 1.0;
  b[p + column] -= 1.0;
  Eigen::VectorXd c(4 * p);
  c.head(2 * p).setOnes();
  c.tail(2 * p).setZero();

  LpResult res = mehrotra_solve(op, b, c, {tol, 80});
  if (res.status != LpStatus::Optimal) {
    if (res.y.size() > 0 && certifies_infeasible(s, column, lambda, res.y))
      throw clime_infeasible(column, "clime: column " + std::to_string(column + 1) +
                                         " infeasible at lambda=" + std::to_string(lambda) +
                                         "; increase lambda");
    // Feasible but hard; accept a looser optimum before giving up.
    res = mehrotra_solve(op, b, c, {1e-8, 120});
    if (res.status != LpStatus::Optimal) {
      if (res.y.size() > 0 && certifies_infeasible(s, column, lambda, res.y))
        throw clime_infeasible(column, "clime: column " + std::to_string(column + 1) +
                                           " infeasible at lambda=" + std::to_string(lambda) +
                                           "; increase lambda");
      throw numerical_error("clime: interior-point failure on column " +
                            std::to_string(column + 1));
    }
  }
  return (res.x.head(p) - res.x.segment(p, p)) / s_scale;
}

double min_feasible_lambda(const Eigen::MatrixXd& s_hat, int column) {
  const double s_scale = s_hat.cwiseAbs().maxCoeff();
  if (!(s_scale > 0.0)) return 1.0;  // zero matrix: the residual is e_j itself

  auto feasible = [&](double lambda) {
    try {
      solve_clime_column(s_hat, column, lambda);
      return true;
    } catch (const clime_infeasible&) {
      return false;
    } catch (const numerical_error&) {
      return false;  // conservative: treat unresolved levels as out of reach
    }
  };

  // lambda = 1 always admits omega = 0. Bisect the feasibility boundary.
  if (feasible(1e-10)) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40 && hi - lo > 1e-10 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

PrecisionEstimate solve_clime(const ClimeProblem& problem, const ClimeOptions& options) {
  check_problem(problem);
  const int p = static_cast<int>(problem.s_hat.rows());
  PrecisionEstimate est;
  est.omega.resize(p, p);
  est.l1_norms.resize(p);

  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(static_cast<std::size_t>(p), options.threads, [&](std::size_t j) {
    try {
      const Eigen::VectorXd col =
          solve_clime_column(problem.s_hat, static_cast<int>(j), problem.lambda, options.tol);
      est.omega.col(static_cast<Eigen::Index>(j)) = col;
      est.l1_norms[static_cast<Eigen::Index>(j)] = col.lpNorm<1>();
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);

  if (options.symmetrize) {
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) {
        const double keep = std::abs(est.omega(i, j)) <= std::abs(est.omega(j, i))
                                ? est.omega(i, j)
                                : est.omega(j, i);
        est.omega(i, j) = keep;
        est.omega(j, i) = keep;
      }
  }

  const Eigen::MatrixXd violation = problem.s_hat * est.omega - Eigen::MatrixXd::Identity(p, p);
  est.feasibility_gap =
      std::max(0.0, violation.cwiseAbs().maxCoeff() - problem.lambda);
  return est;
}

}  // namespace betaflow
