#include "betaflow/ipm.hpp"

#include <algorithm>
#include <cmath>

namespace betaflow {

namespace {

// Largest alpha in [0, 1] with v + alpha * dv >= 0.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

}  // namespace

LpResult mehrotra_solve(const LpOperator& op, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                        const LpOptions& options) {
  const int n = op.cols;
  LpResult out;

  // Mehrotra starting point from the least-squares heuristic.
  Eigen::LLT<Eigen::MatrixXd> aat_llt(op.aat);
  if (aat_llt.info() != Eigen::Success) {
    Eigen::MatrixXd reg = op.aat;
    reg.diagonal().array() += 1e-10 * (1.0 + op.aat.diagonal().maxCoeff());
    aat_llt.compute(reg);
    if (aat_llt.info() != Eigen::Success) return out;
  }
  Eigen::VectorXd x = op.apply_t(aat_llt.solve(b));
  Eigen::VectorXd y = aat_llt.solve(op.apply(c));
  Eigen::VectorXd z = c - op.apply_t(y);

  const double dx0 = std::max(-1.5 * x.minCoeff(), 0.0);
  const double dz0 = std::max(-1.5 * z.minCoeff(), 0.0);
  x.array() += dx0;
  z.array() += dz0;
  const double xz = x.dot(z);
  const double sx = x.sum();
  const double sz = z.sum();
  x.array() += (sz > 0.0) ? 0.5 * xz / sz : 1.0;
  z.array() += (sx > 0.0) ? 0.5 * xz / sx : 1.0;
  if (x.minCoeff() <= 0.0) x.array() += 1.0 - x.minCoeff();
  if (z.minCoeff() <= 0.0) z.array() += 1.0 - z.minCoeff();

  const double bnorm = 1.0 + b.lpNorm<Eigen::Infinity>();
  const double cnorm = 1.0 + c.lpNorm<Eigen::Infinity>();

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd rp = b - op.apply(x);
    const Eigen::VectorXd rd = c - op.apply_t(y) - z;
    const double mu = x.dot(z) / n;
    const double pinf = rp.lpNorm<Eigen::Infinity>() / bnorm;
    const double dinf = rd.lpNorm<Eigen::Infinity>() / cnorm;
    const double cx = c.dot(x);
    const double gap = std::abs(cx - b.dot(y)) / (1.0 + std::abs(cx));

    out.iterations = iter - 1;
    if (pinf <= options.tol && dinf <= options.tol && gap <= options.tol) {
      out.x = x;
      out.y = y;
      out.z = z;
      out.objective = cx;
      out.status = LpStatus::Optimal;
      return out;
    }

    // Divergence heuristic: an infeasible primal drives the dual objective to
    // infinity while the primal residual stalls.
    if (pinf > 1e3 * options.tol && std::abs(b.dot(y)) > 1e10 * (1.0 + std::abs(cx))) {
      out.status = LpStatus::MaxIterations;
      out.x = x;
      out.y = y;
      out.z = z;
      out.objective = cx;
      return out;
    }

    const Eigen::VectorXd d = x.cwiseQuotient(z);
    Eigen::MatrixXd m = op.normal(d);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      // Regularization ladder for rank-deficient constraint blocks.
      const double scale = 1.0 + m.diagonal().maxCoeff();
      for (double jitter = 1e-12; jitter <= 1e-4; jitter *= 100.0) {
        Eigen::MatrixXd reg = m;
        reg.diagonal().array() += jitter * scale;
        llt.compute(reg);
        if (llt.info() == Eigen::Success) break;
      }
      if (llt.info() != Eigen::Success) {
        out.status = LpStatus::NumericalTrouble;
        out.x = x;
        out.y = y;
        out.z = z;
        out.objective = cx;
        return out;
      }
    }

    // One Newton solve for a given complementarity target rc.
    auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                         Eigen::VectorXd& dz) {
      const Eigen::VectorXd rhs =
          rp + op.apply(d.cwiseProduct(rd) - rc.cwiseQuotient(z));
      dy = llt.solve(rhs);
      dx = d.cwiseProduct(op.apply_t(dy) - rd) + rc.cwiseQuotient(z);
      dz = (rc - z.cwiseProduct(dx)).cwiseQuotient(x);
    };

    Eigen::VectorXd dx_aff, dy_aff, dz_aff;
    direction(-x.cwiseProduct(z), dx_aff, dy_aff, dz_aff);
    const double ap_aff = max_step(x, dx_aff);
    const double ad_aff = max_step(z, dz_aff);
    const double mu_aff = (x + ap_aff * dx_aff).dot(z + ad_aff * dz_aff) / n;
    const double sigma = std::pow(mu_aff / mu, 3.0);

    const Eigen::VectorXd rc =
        Eigen::VectorXd::Constant(n, sigma * mu) - x.cwiseProduct(z) -
        dx_aff.cwiseProduct(dz_aff);
    Eigen::VectorXd dx, dy, dz;
    direction(rc, dx, dy, dz);

    const double ap = std::min(1.0, 0.99995 * max_step(x, dx));
    const double ad = std::min(1.0, 0.99995 * max_step(z, dz));
    x += ap * dx;
    y += ad * dy;
    z += ad * dz;

    if (!x.allFinite() || !z.allFinite()) {
      out.status = LpStatus::NumericalTrouble;
      return out;
    }
  }

  out.x = x;
  out.y = y;
  out.z = z;
  out.objective = c.dot(x);
  out.status = LpStatus::MaxIterations;
  return out;
}

}  // namespace betaflow
