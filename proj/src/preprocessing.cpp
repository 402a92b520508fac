#include "betaflow/preprocessing.hpp"

#include <cmath>
#include <string>

#include "betaflow/errors.hpp"

namespace betaflow {

void validate_panel(const LogPricePanel& panel) {
  const int n = panel.n();
  if (n < 2) throw data_error("panel: need at least 3 grid points");
  if (panel.t.size() != panel.y.size() || panel.x.rows() != panel.y.size())
    throw data_error("panel: t/Y/X length mismatch");
  if (!panel.t.allFinite() || !panel.y.allFinite() || !panel.x.allFinite())
    throw data_error("panel: non-finite values");
  const double dt = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const double step = panel.t[i + 1] - panel.t[i];
    if (step <= 0.0) throw data_error("panel: time grid not strictly increasing at row " +
                                      std::to_string(i + 1));
    if (std::abs(step - dt) > 1e-9)
      throw data_error("panel: non-uniform grid at row " + std::to_string(i + 1));
  }
}

double bipower_variation(const Eigen::VectorXd& increments) {
  const auto n = increments.size();
  if (n < 2) throw data_error("bipower_variation: need at least 2 increments");
  double acc = 0.0;
  for (Eigen::Index i = 1; i < n; ++i)
    acc += std::abs(increments[i - 1]) * std::abs(increments[i]);
  return M_PI_2 * acc;
}

IncrementSet truncate_covariates(const LogPricePanel& panel) {
  validate_panel(panel);
  const int n = panel.n();
  const int p = panel.p();
  IncrementSet inc;
  inc.delta_n = 1.0 / n;
  inc.dy = panel.y.tail(n) - panel.y.head(n);
  inc.dx_trunc.resize(n, p);
  inc.v.resize(p);
  const double root_n = std::sqrt(static_cast<double>(n));
  for (int j = 0; j < p; ++j) {
    const Eigen::VectorXd dxj = panel.x.col(j).tail(n) - panel.x.col(j).head(n);
    inc.v[j] = 3.0 * std::sqrt(bipower_variation(dxj)) / root_n;
    for (int i = 0; i < n; ++i)
      inc.dx_trunc(i, j) = std::abs(dxj[i]) <= inc.v[j] ? dxj[i] : 0.0;
  }
  return inc;
}

void truncate_dependent(const LogPricePanel& panel, IncrementSet& inc) {
  const int n = panel.n();
  const Eigen::VectorXd dy = panel.y.tail(n) - panel.y.head(n);
  inc.u_n = 3.0 * std::sqrt(bipower_variation(dy)) / std::sqrt(static_cast<double>(n));
  inc.dy_trunc.resize(n);
  for (int i = 0; i < n; ++i) inc.dy_trunc[i] = std::abs(dy[i]) <= inc.u_n ? dy[i] : 0.0;
}

IncrementSet make_increments(const LogPricePanel& panel) {
  IncrementSet inc = truncate_covariates(panel);
  truncate_dependent(panel, inc);
  return inc;
}

namespace {

// Population convention: divide by the column length, not length - 1.
void column_stats(const Eigen::VectorXd& col, double& mean, double& sd) {
  mean = col.mean();
  sd = std::sqrt((col.array() - mean).square().mean());
}

Eigen::VectorXd standardized(const Eigen::VectorXd& col, double mean, double sd) {
  return (col.array() - mean) / sd;
}

}  // namespace

IncrementSet standardize(const IncrementSet& inc) {
  if (inc.scale.standardized) return inc;
  IncrementSet out = inc;
  out.scale.standardized = true;

  column_stats(inc.dy, out.scale.mean_y, out.scale.sd_y);
  if (out.scale.sd_y <= 0.0) throw data_error("standardize: Y increments have zero variance");
  out.dy = standardized(inc.dy, out.scale.mean_y, out.scale.sd_y);

  if (inc.dy_trunc.size() > 0) {
    column_stats(inc.dy_trunc, out.scale.mean_y_trunc, out.scale.sd_y_trunc);
    if (out.scale.sd_y_trunc <= 0.0)
      throw data_error("standardize: truncated Y increments have zero variance");
    out.dy_trunc = standardized(inc.dy_trunc, out.scale.mean_y_trunc, out.scale.sd_y_trunc);
  }

  const int p = inc.p();
  out.scale.mean_x.resize(p);
  out.scale.sd_x.resize(p);
  for (int j = 0; j < p; ++j) {
    double mean = 0.0, sd = 0.0;
    column_stats(inc.dx_trunc.col(j), mean, sd);
    if (sd <= 0.0)
      throw data_error("standardize: covariate X_" + std::to_string(j + 1) +
                       " has zero variance after truncation");
    out.scale.mean_x[j] = mean;
    out.scale.sd_x[j] = sd;
    out.dx_trunc.col(j) = standardized(inc.dx_trunc.col(j), mean, sd);
  }
  return out;
}

Eigen::VectorXd rescale_beta(const Eigen::VectorXd& beta, const ScaleInfo& scale,
                             ResponseKind kind) {
  if (!scale.standardized) return beta;
  const double sd_y = scale.response_sd(kind);
  Eigen::VectorXd out(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) out[j] = beta[j] * sd_y / scale.sd_x[j];
  return out;
}

}  // namespace betaflow
