#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "betaflow/errors.hpp"
#include "betaflow/huber_lasso.hpp"
#include "reference_solvers.hpp"

using namespace betaflow;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Instance {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Instance random_instance(std::mt19937_64& eng, int k, int p, bool outliers) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Instance inst;
  inst.x.resize(k, p);
  inst.y.resize(k);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[0] = 1.5;
  if (p > 2) beta[2] = -0.7;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < p; ++j) inst.x(i, j) = normal(eng);
    inst.y[i] = inst.x.row(i).dot(beta) + 0.2 * normal(eng);
    if (outliers && i % 11 == 0) inst.y[i] += 8.0 * normal(eng);
  }
  return inst;
}

}  // namespace

TEST_CASE("huber loss values on both branches") {
  CHECK(huber_loss(0.0, 1.0) == 0.0);
  CHECK(huber_loss(0.5, 1.0) == doctest::Approx(0.125));
  CHECK(huber_loss(3.0, 1.0) == doctest::Approx(2.5));
  CHECK(huber_loss(-3.0, 1.0) == doctest::Approx(2.5));
  CHECK(huber_loss(2.0, kInf) == doctest::Approx(2.0));
  CHECK_THROWS_AS(huber_loss(1.0, 0.0), usage_error);
}

TEST_CASE("huber gradient is the clip function") {
  CHECK(huber_grad(0.3, 1.0) == doctest::Approx(0.3));
  CHECK(huber_grad(5.0, 2.0) == doctest::Approx(2.0));
  CHECK(huber_grad(-5.0, 2.0) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(huber_grad(1.0, -1.0), usage_error);
}

TEST_CASE("gradient matches central differences away from the kinks") {
  const double tau = 0.8;
  const double h = 1e-6;
  for (int i = 0; i <= 100; ++i) {
    const double x = -3.0 * tau + i * (6.0 * tau / 100.0);
    if (std::abs(std::abs(x) - tau) < 10.0 * h) continue;
    const double fd = (huber_loss(x + h, tau) - huber_loss(x - h, tau)) / (2.0 * h);
    CHECK(huber_grad(x, tau) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("full shrinkage when eta dominates the gradient at zero") {
  std::mt19937_64 eng(1);
  const Instance inst = random_instance(eng, 40, 4, false);
  HuberLassoProblem pb{inst.x, inst.y, 1.0, 0.0, 0};
  const double eta = smooth_gradient(pb, Eigen::VectorXd::Zero(4)).lpNorm<Eigen::Infinity>();
  pb.eta = 1.5 * eta;
  const SpotBetaEstimate est = solve(pb, Eigen::VectorXd::Zero(4));
  CHECK(est.converged);
  CHECK(est.beta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("p=1 exact interpolation without penalty") {
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, -1, -2, 0.5;
  const Eigen::VectorXd y = 2.0 * x.col(0);
  HuberLassoProblem pb{x, y, kInf, 0.0, 0};
  const SpotBetaEstimate est = solve(pb, Eigen::VectorXd::Zero(1), {1e-10, 20000});
  CHECK(est.beta[0] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("solver matches the coordinate-descent reference on random instances") {
  std::mt19937_64 eng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 20 + trial;
    const int p = 3 + trial % 3;
    const Instance inst = random_instance(eng, k, p, trial % 2 == 0);
    const double tau = (trial % 3 == 0) ? 0.5 : (trial % 3 == 1 ? 1.0 : kInf);
    const double eta = (trial % 2 == 0) ? 0.05 : 0.3;
    HuberLassoProblem pb{inst.x, inst.y, tau, eta, 0};

    const SpotBetaEstimate est = solve(pb, Eigen::VectorXd::Zero(p), {1e-9, 30000});
    const Eigen::VectorXd ref = testref::cd_huber_lasso_reference(inst.x, inst.y, tau, eta);

    CHECK(est.converged);
    CHECK(est.kkt_gap <= 1e-9);
    CHECK(objective_value(pb, est.beta) <= objective_value(pb, ref) + 1e-6);
    CHECK(std::abs(objective_value(pb, est.beta) - objective_value(pb, ref)) < 1e-6);
  }
}

TEST_CASE("objective is convex along random segments") {
  std::mt19937_64 eng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Instance inst = random_instance(eng, 30, 4, true);
  const HuberLassoProblem pb{inst.x, inst.y, 0.7, 0.1, 0};
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd a(4), b(4);
    for (int j = 0; j < 4; ++j) {
      a[j] = normal(eng);
      b[j] = normal(eng);
    }
    const double lam = unif(eng);
    const double lhs = objective_value(pb, lam * a + (1 - lam) * b);
    const double rhs = lam * objective_value(pb, a) + (1 - lam) * objective_value(pb, b);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("smooth gradient matches finite differences of the smooth part") {
  std::mt19937_64 eng(29);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Instance inst = random_instance(eng, 25, 3, true);
  const HuberLassoProblem pb{inst.x, inst.y, 0.6, 0.0, 0};
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd beta(3);
    for (int j = 0; j < 3; ++j) beta[j] = normal(eng);
    const Eigen::VectorXd g = smooth_gradient(pb, beta);
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd bp = beta, bm = beta;
      bp[j] += h;
      bm[j] -= h;
      const double fd = (objective_value(pb, bp) - objective_value(pb, bm)) / (2.0 * h);
      CHECK(g[j] == doctest::Approx(fd).epsilon(2e-5));
    }
  }
}

TEST_CASE("solution is invariant under row permutation") {
  std::mt19937_64 eng(31);
  const Instance inst = random_instance(eng, 30, 4, false);
  HuberLassoProblem pb{inst.x, inst.y, 0.9, 0.08, 0};
  const SpotBetaEstimate a = solve(pb, Eigen::VectorXd::Zero(4), {1e-10, 30000});

  std::vector<int> perm(30);
  for (int i = 0; i < 30; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), eng);
  HuberLassoProblem pb2 = pb;
  for (int i = 0; i < 30; ++i) {
    pb2.design.row(i) = pb.design.row(perm[i]);
    pb2.response[i] = pb.response[perm[i]];
  }
  const SpotBetaEstimate b = solve(pb2, Eigen::VectorXd::Zero(4), {1e-10, 30000});
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("large finite tau agrees with the infinite-tau least-squares path") {
  std::mt19937_64 eng(37);
  const Instance inst = random_instance(eng, 40, 4, false);
  HuberLassoProblem finite{inst.x, inst.y, 1e9, 0.05, 0};
  HuberLassoProblem infinite{inst.x, inst.y, kInf, 0.05, 0};
  const SpotBetaEstimate a = solve(finite, Eigen::VectorXd::Zero(4), {1e-10, 30000});
  const SpotBetaEstimate b = solve(infinite, Eigen::VectorXd::Zero(4), {1e-10, 30000});
  const Eigen::VectorXd resid = inst.y - inst.x * a.beta;
  REQUIRE(resid.cwiseAbs().maxCoeff() < 1e9);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("monotone objective sequence and best-iterate return on tiny budgets") {
  std::mt19937_64 eng(41);
  const Instance inst = random_instance(eng, 35, 5, true);
  HuberLassoProblem pb{inst.x, inst.y, 0.5, 0.02, 0};

  // iteration budgets produce objectives that never increase with more budget
  double prev = std::numeric_limits<double>::infinity();
  for (int budget : {1, 3, 10, 30, 100, 1000}) {
    const SpotBetaEstimate est = solve(pb, Eigen::VectorXd::Zero(5), {1e-12, budget});
    CHECK(est.objective <= prev + 1e-12);
    prev = est.objective;
    if (budget < 10) CHECK_FALSE(est.converged);
    CHECK(est.beta.allFinite());
  }
}

TEST_CASE("input validation") {
  Eigen::MatrixXd x(3, 2);
  x.setOnes();
  Eigen::VectorXd y(2);
  y.setOnes();
  CHECK_THROWS_AS(solve({x, y, 1.0, 0.0, 0}, Eigen::VectorXd::Zero(2)), usage_error);
  Eigen::VectorXd y3 = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(solve({x, y3, -1.0, 0.0, 0}, Eigen::VectorXd::Zero(2)), usage_error);
  CHECK_THROWS_AS(solve({x, y3, 1.0, -0.5, 0}, Eigen::VectorXd::Zero(2)), usage_error);
  CHECK_THROWS_AS(solve({x, y3, 1.0, 0.0, 0}, Eigen::VectorXd::Zero(5)), usage_error);
}
