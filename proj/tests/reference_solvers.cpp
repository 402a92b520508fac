#include "reference_solvers.hpp"

#include <cmath>
#include <limits>

namespace testref {

namespace {
constexpr double kEps = 1e-11;

// One Bland-rule pivot pass over a tableau whose last column is the RHS and
// whose last row is the objective (reduced costs). Returns false on
// unboundedness.
bool run_simplex(Eigen::MatrixXd& t, std::vector<int>& basis, int usable_cols) {
  const int m = static_cast<int>(t.rows()) - 1;
  for (;;) {
    int enter = -1;
    for (int j = 0; j < usable_cols; ++j) {
      if (t(m, j) < -kEps) {
        enter = j;
        break;  // Bland: smallest index
      }
    }
    if (enter < 0) return true;

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t(i, enter) > kEps) {
        const double ratio = t(i, t.cols() - 1) / t(i, enter);
        if (leave < 0 || ratio < best_ratio - kEps ||
            (ratio < best_ratio + kEps && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return false;  // unbounded

    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double factor = t(i, enter);
      if (factor != 0.0) t.row(i) -= factor * t.row(leave);
    }
    basis[leave] = enter;
  }
}

}  // namespace

SimplexResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());

  // Count artificials: one per negative-RHS row.
  int n_art = 0;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0.0) ++n_art;

  const int slack0 = n;
  const int art0 = n + m;
  const int total = n + m + n_art;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, total + 1);
  std::vector<int> basis(m, -1);

  int art = art0;
  for (int i = 0; i < m; ++i) {
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    t.block(i, 0, 1, n) = sign * a.row(i);
    t(i, slack0 + i) = sign;  // slack keeps its original +1 before row negation
    t(i, total) = sign * b[i];
    if (b[i] < 0.0) {
      t(i, art) = 1.0;
      basis[i] = art;
      ++art;
    } else {
      basis[i] = slack0 + i;
    }
  }

  SimplexResult out;

  // Phase 1: minimize the artificial sum; price out the initial basis.
  if (n_art > 0) {
    for (int j = art0; j < total; ++j) t(m, j) = 1.0;
    for (int i = 0; i < m; ++i)
      if (basis[i] >= art0) t.row(m) -= t.row(i);
    if (!run_simplex(t, basis, total)) return out;  // cannot happen, bounded below by 0
    if (t(m, total) < -1e-8) {
      out.status = SimplexResult::Status::Infeasible;
      return out;
    }
    // Drive leftover artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < art0) continue;
      int pivot_col = -1;
      for (int j = 0; j < art0; ++j) {
        if (std::abs(t(i, j)) > 1e-9) {
          pivot_col = j;
          break;
        }
      }
      if (pivot_col < 0) continue;  // redundant row
      t.row(i) /= t(i, pivot_col);
      for (int k = 0; k <= m; ++k) {
        if (k == i) continue;
        const double factor = t(k, pivot_col);
        if (factor != 0.0) t.row(k) -= factor * t.row(i);
      }
      basis[i] = pivot_col;
    }
  }

  // Phase 2: true objective, artificial columns frozen.
  t.row(m).setZero();
  for (int j = 0; j < n; ++j) t(m, j) = c[j];
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n && c[basis[i]] != 0.0) t.row(m) -= c[basis[i]] * t.row(i);
  }
  if (!run_simplex(t, basis, art0)) {
    out.status = SimplexResult::Status::Unbounded;
    return out;
  }

  out.status = SimplexResult::Status::Optimal;
  out.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) out.x[basis[i]] = t(i, total);
  out.objective = c.dot(out.x);
  return out;
}

ClimeColumnOracle clime_column_oracle(const Eigen::MatrixXd& s, int column, double lambda) {
  const int p = static_cast<int>(s.rows());
  // Variables [w+; w-]; constraints S(w+ - w-) - e <= lambda, -(...) <= lambda.
  Eigen::MatrixXd a(2 * p, 2 * p);
  a.topLeftCorner(p, p) = s;
  a.topRightCorner(p, p) = -s;
  a.bottomLeftCorner(p, p) = -s;
  a.bottomRightCorner(p, p) = s;
  Eigen::VectorXd b(2 * p);
  b.setConstant(lambda);
  b[column] += 1.0;
  b[p + column] -= 1.0;
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(2 * p);

  const SimplexResult res = simplex_solve(a, b, c);
  ClimeColumnOracle out;
  if (res.status != SimplexResult::Status::Optimal) return out;
  out.feasible = true;
  out.omega_col = res.x.head(p) - res.x.tail(p);
  out.objective = res.objective;
  return out;
}

namespace {

double psi(double x, double tau) {
  if (std::isinf(tau)) return x;
  return std::max(-tau, std::min(tau, x));
}

}  // namespace

Eigen::VectorXd cd_huber_lasso_reference(const Eigen::MatrixXd& design,
                                         const Eigen::VectorXd& response, double tau, double eta,
                                         int max_cycles, double tol) {
  const int k = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd residual = response;

  // Directional derivative of the smooth part along coordinate j at offset b
  // from the current residual: G(b) = -(1/k) sum psi_tau(q - x b) x.
  auto g_of = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& xj, double b) {
    double acc = 0.0;
    for (int h = 0; h < k; ++h) acc += psi(q[h] - xj[h] * b, tau) * xj[h];
    return -acc / static_cast<double>(k);
  };

  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      const Eigen::VectorXd xj = design.col(j);
      const double xj2 = xj.squaredNorm();
      if (xj2 == 0.0) continue;
      const Eigen::VectorXd q = residual + xj * beta[j];

      double b_new;
      if (std::isinf(tau)) {
        // closed-form soft threshold for the squared loss
        const double rho = xj.dot(q) / k;
        const double denom = xj2 / k;
        if (rho > eta)
          b_new = (rho - eta) / denom;
        else if (rho < -eta)
          b_new = (rho + eta) / denom;
        else
          b_new = 0.0;
      } else {
        const double g0 = g_of(q, xj, 0.0);
        if (std::abs(g0) <= eta) {
          b_new = 0.0;
        } else {
          const double target = g0 < -eta ? -eta : eta;  // G(b*) = target
          const double dir = g0 < -eta ? 1.0 : -1.0;
          double lo = 0.0, hi = dir;
          while ((g_of(q, xj, hi) - target) * dir < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (std::abs(hi) > 1e12) break;
          }
          // G is nondecreasing; bisect to machine-level accuracy.
          if (dir < 0.0) std::swap(lo, hi);
          for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (g_of(q, xj, mid) < target)
              lo = mid;
            else
              hi = mid;
            if (hi - lo < 1e-16 * (1.0 + std::abs(hi))) break;
          }
          b_new = 0.5 * (lo + hi);
        }
      }

      const double change = std::abs(b_new - beta[j]);
      if (change > 0.0) {
        residual = q - xj * b_new;
        beta[j] = b_new;
        max_change = std::max(max_change, change);
      }
    }
    if (max_change < tol * (1.0 + beta.lpNorm<Eigen::Infinity>())) break;
  }
  return beta;
}

}  // namespace testref
