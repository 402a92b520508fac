#pragma once

#include <Eigen/Dense>

namespace betaflow {

// Synchronized log-price grid over [0,1]: t has n+1 points with spacing 1/n.
struct LogPricePanel {
  Eigen::VectorXd t;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;  // (n+1) x p

  int n() const { return static_cast<int>(y.size()) - 1; }
  int p() const { return static_cast<int>(x.cols()); }
};

// Throws data_error on non-uniform grids, NaNs, or shape mismatches.
void validate_panel(const LogPricePanel& panel);

// Which response column a regression consumed; determines the scale used when
// mapping betas back to raw units.
enum class ResponseKind { Raw, Truncated };

struct ScaleInfo {
  bool standardized = false;
  double mean_y = 0.0, sd_y = 1.0;              // raw Y increments
  double mean_y_trunc = 0.0, sd_y_trunc = 1.0;  // truncated Y increments
  Eigen::VectorXd mean_x, sd_x;                 // truncated covariate increments

  double response_sd(ResponseKind kind) const {
    return kind == ResponseKind::Raw ? sd_y : sd_y_trunc;
  }
};

struct IncrementSet {
  Eigen::VectorXd dy;        // raw Y increments
  Eigen::MatrixXd dx_trunc;  // jump-truncated covariate increments, n x p
  Eigen::VectorXd dy_trunc;  // jump-truncated Y increments (baselines only)
  Eigen::VectorXd v;         // per-covariate thresholds v_{j,n}
  double u_n = 0.0;          // Y threshold
  double delta_n = 0.0;      // 1/n
  ScaleInfo scale;

  int n() const { return static_cast<int>(dy.size()); }
  int p() const { return static_cast<int>(dx_trunc.cols()); }
};

// (pi/2) * sum_{i=2}^{n} |d_{i-1}| * |d_i|; requires n >= 2.
double bipower_variation(const Eigen::VectorXd& increments);

// Fills dy, dx_trunc and v: v_j = 3 sqrt(BV_j) n^{-1/2}, entries with
// |dx_ij| > v_j zeroed (kept as zero rows, never dropped).
IncrementSet truncate_covariates(const LogPricePanel& panel);

// Same rule applied to Y; fills dy_trunc and u_n on an existing set.
void truncate_dependent(const LogPricePanel& panel, IncrementSet& inc);

// Convenience: both truncations.
IncrementSet make_increments(const LogPricePanel& panel);

// Zero-mean unit-variance columns (population sd). Each column keeps its own
// scale so the fitted betas rescale back exactly. Throws data_error naming the
// first zero-variance column.
IncrementSet standardize(const IncrementSet& inc);

// beta_j (standardized space) -> beta_j * sd_response / sd_{x_j}.
Eigen::VectorXd rescale_beta(const Eigen::VectorXd& beta, const ScaleInfo& scale,
                             ResponseKind kind = ResponseKind::Raw);

}  // namespace betaflow
