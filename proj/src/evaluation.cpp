#include "betaflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "betaflow/errors.hpp"
#include "betaflow/parallel.hpp"
#include "betaflow/tuning.hpp"

namespace betaflow {

ErrorTriple beta_errors(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) throw usage_error("beta_errors: length mismatch");
  const Eigen::VectorXd diff = estimate - truth;
  return {diff.lpNorm<Eigen::Infinity>(), diff.lpNorm<1>(), diff.norm()};
}

double r_squared(const IncrementSet& increments, const Eigen::VectorXd& beta_raw, bool holdout) {
  (void)holdout;
  if (increments.scale.standardized)
    throw usage_error("r_squared: expects raw (unstandardized) increments");
  if (beta_raw.size() != increments.p()) throw usage_error("r_squared: beta length mismatch");
  const Eigen::VectorXd fitted = increments.dx_trunc * beta_raw;
  const double ssr = (increments.dy - fitted).squaredNorm();
  const double mean = increments.dy.mean();
  const double sst = (increments.dy.array() - mean).square().sum();
  if (sst <= 0.0) throw data_error("r_squared: zero total sum of squares");
  return 1.0 - ssr / sst;
}

namespace {

struct CellKey {
  int method;
  double df;
  int n;
  bool operator<(const CellKey& o) const {
    if (method != o.method) return method < o.method;
    if (df != o.df) return df < o.df;
    return n < o.n;
  }
};

void accumulate(CellSummary& cell, const std::vector<double>& xs, double& mean, double& se) {
  const int m = static_cast<int>(xs.size());
  double mu = 0.0;
  for (double x : xs) mu += x;
  mu /= m;
  double var = 0.0;
  for (double x : xs) var += (x - mu) * (x - mu);
  var = m > 1 ? var / (m - 1) : 0.0;
  mean = mu;
  se = std::sqrt(var / m);
  cell.count = m;
}

// Data-driven constants for one cell, picked on its first replication. The
// precision-matrix level stays per-seed: its feasibility floor moves with the
// realized windows.
struct CellTuning {
  double c_eta_red = 0.0;
  double c_eta_ed = 0.0;
  double eta_lasso = 0.0;
};

CellTuning tune_cell(const BenchmarkSpec& spec, const SimConfig& sim_cfg) {
  CellTuning out;
  const SimOutput sim = simulate_paths(sim_cfg);
  const IncrementSet inc = make_increments(sim.panel);
  const IncrementSet std_inc = standardize(inc);

  EstimatorConfig red = spec.estimator;
  red.method = Method::RED;
  red.threads = spec.threads;
  if (red.c_eta <= 0.0) {
    SpotPath path = compute_spot_path(std_inc, red);
    out.c_eta_red = path.c_eta_used;
  } else {
    out.c_eta_red = red.c_eta;
  }

  EstimatorConfig ed = spec.estimator;
  ed.method = Method::ED;
  ed.threads = spec.threads;
  if (ed.c_eta <= 0.0) {
    SpotPath path = compute_spot_path(std_inc, ed);
    out.c_eta_ed = path.c_eta_used;
  } else {
    out.c_eta_ed = ed.c_eta;
  }

  out.eta_lasso = run_lasso_baseline_bic(inc, spec.estimator.eta_grid).eta_lasso;
  return out;
}

}  // namespace

std::vector<CellSummary> summarize(const std::vector<SeedRecord>& records) {
  std::map<CellKey, std::vector<const SeedRecord*>> groups;
  for (const SeedRecord& r : records) {
    if (r.failed) continue;
    groups[{static_cast<int>(r.method), r.df, r.n}].push_back(&r);
  }
  std::vector<CellSummary> cells;
  for (const auto& [key, rs] : groups) {
    CellSummary cell;
    cell.method = static_cast<Method>(key.method);
    cell.df = key.df;
    cell.n = key.n;
    std::vector<double> maxs, l1s, l2s;
    for (const SeedRecord* r : rs) {
      maxs.push_back(r->error.max_err);
      l1s.push_back(r->error.l1);
      l2s.push_back(r->error.l2);
    }
    accumulate(cell, maxs, cell.mean_max, cell.se_max);
    accumulate(cell, l1s, cell.mean_l1, cell.se_l1);
    accumulate(cell, l2s, cell.mean_l2, cell.se_l2);
    cells.push_back(cell);
  }
  return cells;
}

BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
  if (spec.replications < 1) throw usage_error("benchmark: replications must be >= 1");
  if (spec.n_values.empty()) throw usage_error("benchmark: n_values must be nonempty");
  for (int n : spec.n_values)
    if (spec.sim.n_all % n != 0)
      throw usage_error("benchmark: every n must divide n_all");

  BenchmarkResult result;
  const std::size_t per_seed = spec.methods.size();
  result.records.resize(spec.regimes.size() * spec.n_values.size() * spec.replications * per_seed);

  std::size_t cell_offset = 0;
  for (double df : spec.regimes) {
    for (int n : spec.n_values) {
      SimConfig sim_cfg = spec.sim;
      sim_cfg.df = df;
      sim_cfg.n = n;

      CellTuning tuning;
      bool have_cell_tuning = false;
      if (spec.reuse_cell_tuning) {
        SimConfig first = sim_cfg;
        first.seed = spec.base_seed;
        tuning = tune_cell(spec, first);
        have_cell_tuning = true;
      }

      const std::size_t base = cell_offset;
      parallel_for(static_cast<std::size_t>(spec.replications), spec.threads, [&](std::size_t rep) {
        SimConfig rep_cfg = sim_cfg;
        rep_cfg.seed = spec.base_seed + rep;
        const std::size_t slot0 = base + rep * per_seed;
        for (std::size_t k = 0; k < per_seed; ++k) {
          SeedRecord& rec = result.records[slot0 + k];
          rec.method = spec.methods[k];
          rec.df = df;
          rec.n = n;
          rec.seed = rep_cfg.seed;
        }
        try {
          const SimOutput sim = simulate_paths(rep_cfg);
          const IncrementSet inc = make_increments(sim.panel);
          const IncrementSet std_inc = standardize(inc);
          ClimeCache cache;
          for (std::size_t k = 0; k < per_seed; ++k) {
            SeedRecord& rec = result.records[slot0 + k];
            try {
              if (rec.method == Method::LASSO) {
                Eigen::VectorXd beta;
                if (have_cell_tuning)
                  beta = run_lasso_baseline(inc, tuning.eta_lasso);
                else
                  beta = run_lasso_baseline_bic(inc, spec.estimator.eta_grid).beta;
                rec.error = beta_errors(beta, sim.true_integrated_beta);
              } else {
                EstimatorConfig cfg = spec.estimator;
                cfg.method = rec.method;
                cfg.threads = 1;  // replications already fan out
                cfg.lambda_select_windows = std::max(1, cfg.lambda_select_windows);
                if (have_cell_tuning)
                  cfg.c_eta = rec.method == Method::RED ? tuning.c_eta_red : tuning.c_eta_ed;
                const IntegratedBeta est = run_red_lasso(std_inc, cfg, &cache);
                rec.error = beta_errors(est.thresholded, sim.true_integrated_beta);
                rec.debiased_error = beta_errors(est.debiased, sim.true_integrated_beta);
                rec.naive_error = beta_errors(est.naive, sim.true_integrated_beta);
              }
            } catch (const std::exception& e) {
              rec.failed = true;
              rec.what = e.what();
            }
          }
        } catch (const std::exception& e) {
          for (std::size_t k = 0; k < per_seed; ++k) {
            result.records[slot0 + k].failed = true;
            result.records[slot0 + k].what = e.what();
          }
        }
      });
      cell_offset += spec.replications * per_seed;
    }
  }

  for (const SeedRecord& r : result.records)
    if (r.failed) ++result.failures;
  result.cells = summarize(result.records);
  return result;
}

}  // namespace betaflow
