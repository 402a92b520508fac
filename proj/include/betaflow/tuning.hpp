#pragma once

#include <map>
#include <string>
#include <vector>

#include "betaflow/clime.hpp"
#include "betaflow/huber_lasso.hpp"
#include "betaflow/pipeline.hpp"

namespace betaflow {

struct GridSelection {
  double chosen = 0.0;
  std::size_t chosen_index = 0;
  std::vector<double> scores;       // NaN where a grid point was skipped
  std::vector<char> feasible;
};

// Aggregate BIC over windows: sum_w [ k_n log(2 L_w(beta_hat)) + df log(k_n) ]
// with df = support size. Ties pick the first (smallest) grid value; grid
// points whose solves do not converge are skipped; all skipped is an error.
GridSelection select_eta_bic_scored(const std::vector<HuberLassoProblem>& window_problems,
                                    const std::vector<double>& grid,
                                    const SolveOptions& options = {});
double select_eta_bic(const std::vector<HuberLassoProblem>& window_problems,
                      const std::vector<double>& grid, const SolveOptions& options = {});

// Summed trace loss tr[(S omega - I)^2] over windows; lambda values that are
// infeasible for some window are skipped. All infeasible is an error.
GridSelection select_lambda_scored(const std::vector<ClimeProblem>& window_matrices,
                                   const std::vector<double>& grid, int threads = 1);
double select_lambda(const std::vector<ClimeProblem>& window_matrices,
                     const std::vector<double>& grid, int threads = 1);

struct TuningReport {
  std::map<std::string, double> chosen;
  std::map<std::string, std::vector<std::pair<double, double>>> grid_scores;
  std::map<std::string, std::string> criterion;
};

// Sequential one-step-ahead MSPE calibration: c_tau against the next-window
// non-robust spot path, then c_varpi against the next-window spot path, then
// c_h against the next panel's debiased integrated estimate. Needs at least
// two panels for the c_h stage.
TuningReport select_mspe_constants(const std::vector<LogPricePanel>& calibration_panels,
                                   const std::vector<double>& grid_tau,
                                   const std::vector<double>& grid_varpi,
                                   const std::vector<double>& grid_h,
                                   const EstimatorConfig& base_config);

// Dyadic search grids for the three constants.
std::vector<double> dyadic_grid(int low_exp, int high_exp);

}  // namespace betaflow
