#include "betaflow/huber_lasso.hpp"

#include <cmath>

#include "betaflow/errors.hpp"

namespace betaflow {

double huber_loss(double x, double tau) {
  if (!(tau > 0.0)) throw usage_error("huber_loss: tau must be positive");
  const double ax = std::abs(x);
  if (ax <= tau) return 0.5 * x * x;
  return tau * ax - 0.5 * tau * tau;
}

double huber_grad(double x, double tau) {
  if (!(tau > 0.0)) throw usage_error("huber_grad: tau must be positive");
  if (x > tau) return tau;
  if (x < -tau) return -tau;
  return x;
}

namespace {

double smooth_loss(const HuberLassoProblem& pb, const Eigen::VectorXd& residual) {
  const double k = static_cast<double>(pb.k_n());
  if (std::isinf(pb.tau)) return 0.5 * residual.squaredNorm() / k;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) acc += huber_loss(residual[i], pb.tau);
  return acc / k;
}

Eigen::VectorXd clipped(const Eigen::VectorXd& residual, double tau) {
  if (std::isinf(tau)) return residual;
  return residual.cwiseMax(-tau).cwiseMin(tau);
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Largest eigenvalue of X'X / k_n bounds the Huber curvature (psi' <= 1).
double curvature_bound(const Eigen::MatrixXd& design) {
  const Eigen::Index p = design.cols();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p) / std::sqrt(static_cast<double>(p));
  double lambda = 0.0;
  for (int it = 0; it < 12; ++it) {
    Eigen::VectorXd w = design.transpose() * (design * v);
    const double norm = w.norm();
    if (norm == 0.0) return 1.0;
    lambda = v.dot(w);
    v = w / norm;
  }
  return lambda / static_cast<double>(design.rows());
}

void check_problem(const HuberLassoProblem& pb) {
  if (pb.design.rows() != pb.response.size())
    throw usage_error("huber_lasso: design/response row mismatch");
  if (!(pb.tau > 0.0)) throw usage_error("huber_lasso: tau must be positive");
  if (pb.eta < 0.0) throw usage_error("huber_lasso: eta must be >= 0");
  if (pb.design.rows() < 1) throw usage_error("huber_lasso: empty window");
}

}  // namespace

double objective_value(const HuberLassoProblem& pb, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd residual = pb.response - pb.design * beta;
  return smooth_loss(pb, residual) + pb.eta * beta.lpNorm<1>();
}

Eigen::VectorXd smooth_gradient(const HuberLassoProblem& pb, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd residual = pb.response - pb.design * beta;
  return -(pb.design.transpose() * clipped(residual, pb.tau)) / static_cast<double>(pb.k_n());
}

double kkt_gap(const HuberLassoProblem& pb, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd g = smooth_gradient(pb, beta);
  double gap = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double gj;
    if (beta[j] > 0.0)
      gj = std::abs(g[j] + pb.eta);
    else if (beta[j] < 0.0)
      gj = std::abs(g[j] - pb.eta);
    else
      gj = std::max(0.0, std::abs(g[j]) - pb.eta);
    gap = std::max(gap, gj);
  }
  return gap;
}

SpotBetaEstimate solve(const HuberLassoProblem& pb, const Eigen::VectorXd& init,
                       const SolveOptions& options) {
  check_problem(pb);
  const int p = pb.p();
  if (init.size() != p) throw usage_error("huber_lasso: init has wrong length");
  if (!init.allFinite()) throw usage_error("huber_lasso: init must be finite");

  double L = std::max(curvature_bound(pb.design), 1e-12);

  Eigen::VectorXd x = init;       // monotone iterate
  Eigen::VectorXd x_prev = init;
  Eigen::VectorXd y = init;       // extrapolated point
  double fx = objective_value(pb, x);
  double t = 1.0;

  SpotBetaEstimate est;
  est.beta = x;
  est.objective = fx;
  est.kkt_gap = kkt_gap(pb, x);
  if (est.kkt_gap <= options.kkt_tol) {
    est.converged = true;
    return est;
  }

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd res_y = pb.response - pb.design * y;
    const double gy = smooth_loss(pb, res_y);
    const Eigen::VectorXd grad_y =
        -(pb.design.transpose() * clipped(res_y, pb.tau)) / static_cast<double>(pb.k_n());

    // Backtracking: find L with g(z) <= g(y) + <grad, z-y> + L/2 |z-y|^2.
    Eigen::VectorXd z(p);
    for (;;) {
      for (int j = 0; j < p; ++j)
        z[j] = soft_threshold(y[j] - grad_y[j] / L, pb.eta / L);
      const Eigen::VectorXd dz = z - y;
      const double gz = smooth_loss(pb, pb.response - pb.design * z);
      if (gz <= gy + grad_y.dot(dz) + 0.5 * L * dz.squaredNorm() + 1e-15) break;
      L *= 2.0;
      if (L > 1e18) throw numerical_error("huber_lasso: line search failed");
    }

    const double fz = objective_value(pb, z);
    if (!std::isfinite(fz)) throw numerical_error("huber_lasso: non-finite objective");

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    x_prev = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;

    est.iterations = iter;
    const double gap = kkt_gap(pb, x);
    if (gap <= options.kkt_tol) {
      est.beta = x;
      est.objective = fx;
      est.kkt_gap = gap;
      est.converged = true;
      return est;
    }
  }

  est.beta = x;
  est.objective = fx;
  est.kkt_gap = kkt_gap(pb, x);
  est.converged = false;
  return est;
}

}  // namespace betaflow
