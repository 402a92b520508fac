#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "betaflow/pipeline.hpp"
#include "betaflow/simulator.hpp"

namespace betaflow {

struct ErrorTriple {
  double max_err = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
};

ErrorTriple beta_errors(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

// 1 - SSR/SST on raw increments: residuals against dx_trunc' beta, total sum
// of squares around the period mean of dy. holdout only documents that beta
// came from a previous period. Throws on zero total sum of squares.
double r_squared(const IncrementSet& increments, const Eigen::VectorXd& beta_raw,
                 bool holdout = false);

struct BenchmarkSpec {
  SimConfig sim;  // template; df and n are overwritten per cell, seed per replication
  std::vector<int> n_values{500, 1000, 2000};
  int replications = 50;
  std::vector<double> regimes{2.0, std::numeric_limits<double>::infinity()};
  std::vector<Method> methods{Method::RED, Method::ED, Method::LASSO};
  EstimatorConfig estimator;
  // Desk-scale shortcut: data-driven constants picked once per (regime, n)
  // cell on the first replication's panel and reused across seeds.
  bool reuse_cell_tuning = true;
  std::uint64_t base_seed = 1;
  int threads = 0;
};

struct SeedRecord {
  Method method = Method::RED;
  double df = 0.0;
  int n = 0;
  std::uint64_t seed = 0;
  ErrorTriple error;           // thresholded estimate vs truth
  ErrorTriple debiased_error;  // pre-threshold (RED/ED only)
  ErrorTriple naive_error;     // plain spot integration (RED/ED only)
  bool failed = false;
  std::string what;
};

struct CellSummary {
  Method method = Method::RED;
  double df = 0.0;
  int n = 0;
  int count = 0;
  double mean_max = 0.0, se_max = 0.0;
  double mean_l1 = 0.0, se_l1 = 0.0;
  double mean_l2 = 0.0, se_l2 = 0.0;
};

struct BenchmarkResult {
  std::vector<SeedRecord> records;
  std::vector<CellSummary> cells;
  int failures = 0;
};

std::vector<CellSummary> summarize(const std::vector<SeedRecord>& records);

// Simulate -> estimate -> score for every (regime, n, replication, method).
// Replications fan out in parallel; per-seed results live in preallocated
// slots so the outcome is independent of scheduling.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

}  // namespace betaflow
