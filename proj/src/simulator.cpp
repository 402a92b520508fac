#include "betaflow/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "betaflow/errors.hpp"
#include "betaflow/rng.hpp"

namespace betaflow {

namespace {
constexpr double kVolFloor = 1e-6;
}

double SimConfig::resolved_s_p() const {
  return s_p > 0.0 ? s_p : std::log(static_cast<double>(p));
}

int SimConfig::active_count() const {
  const int k = static_cast<int>(std::floor(resolved_s_p()));
  return std::clamp(k, 0, p);
}

void validate(const SimConfig& config) {
  if (config.p < 1) throw usage_error("simulator: p must be >= 1");
  if (config.n_all < 1 || config.n < 1) throw usage_error("simulator: grid sizes must be >= 1");
  if (config.n_all % config.n != 0)
    throw usage_error("simulator: n_all must be a multiple of n");
  if (!(config.df > 0.0))
    throw usage_error("simulator: df must be positive (or inf for Gaussian)");
  if (config.jump_intensity_x < 0.0 || config.jump_intensity_y < 0.0)
    throw usage_error("simulator: jump intensities must be >= 0");
  if (config.rho < 0.0 || config.rho >= 1.0)
    throw usage_error("simulator: rho must lie in [0, 1)");
  if (config.ou_nu.mean_reversion <= 0.0 || config.ou_u.mean_reversion <= 0.0 ||
      config.ou_xi.mean_reversion <= 0.0)
    throw usage_error("simulator: OU mean reversion must be positive");
  if (config.ou_nu.vol < 0.0 || config.ou_u.vol < 0.0 || config.ou_xi.vol < 0.0)
    throw usage_error("simulator: OU vol must be >= 0");
}

Eigen::VectorXd simulate_ou(const OUParams& params, double h, const Eigen::VectorXd& noise) {
  if (!(h > 0.0)) throw usage_error("simulate_ou: step must be positive");
  const auto steps = noise.size();
  Eigen::VectorXd path(steps + 1);
  path[0] = params.init;
  const double sqrt_h = std::sqrt(h);
  for (Eigen::Index l = 0; l < steps; ++l) {
    path[l + 1] = path[l] + params.mean_reversion * (params.long_run_mean - path[l]) * h +
                  params.vol * sqrt_h * noise[l];
  }
  return path;
}

CovariancePath simulate_covariance_path(const SimConfig& config, const Eigen::VectorXd& u_path) {
  const int p = config.p;
  Eigen::MatrixXd corr(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) corr(i, j) = std::pow(config.rho, std::abs(i - j));
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success)
    throw numerical_error("simulate_covariance_path: correlation factorization failed");

  CovariancePath out;
  out.chol_corr = llt.matrixL();
  out.sqrt_u.resize(u_path.size());
  for (Eigen::Index l = 0; l < u_path.size(); ++l) {
    const double u = std::max(u_path[l], kVolFloor);
    if (!(u > 0.0)) throw numerical_error("simulate_covariance_path: u(t) <= 0 after clamping");
    out.sqrt_u[l] = std::sqrt(u);
  }
  return out;
}

namespace {

// Compound-Poisson arrivals on (0,1]; a jump at time T lands in the increment
// of generation step ceil(T * n_all).
struct JumpDraws {
  std::vector<double> times;
  std::vector<double> sizes;
};

JumpDraws draw_jumps(std::mt19937_64& eng, double intensity, double scale, double df) {
  JumpDraws out;
  if (intensity <= 0.0) return out;
  std::poisson_distribution<int> pois(intensity);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int count = pois(eng);
  out.times.reserve(count);
  out.sizes.reserve(count);
  for (int k = 0; k < count; ++k) {
    out.times.push_back(unif(eng));
    out.sizes.push_back(scale * draw_t(eng, df));
  }
  return out;
}

Eigen::VectorXd draw_normals(std::mt19937_64& eng, Eigen::Index count) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(count);
  for (Eigen::Index i = 0; i < count; ++i) out[i] = normal(eng);
  return out;
}

}  // namespace

SimOutput simulate_paths(const SimConfig& config) {
  validate(config);
  const int p = config.p;
  const int n_all = config.n_all;
  const int n = config.n;
  const int stride = n_all / n;
  const double h = 1.0 / n_all;
  const double sqrt_h = std::sqrt(h);
  const int actives = config.active_count();

  auto eng_b = make_engine(config.seed, Stream::BrownianX);
  auto eng_w = make_engine(config.seed, Stream::BrownianW);
  auto eng_wb = make_engine(config.seed, Stream::BrownianBeta);
  auto eng_nu = make_engine(config.seed, Stream::OuNu);
  auto eng_u = make_engine(config.seed, Stream::OuU);
  auto eng_xi = make_engine(config.seed, Stream::OuXi);
  auto eng_tnu = make_engine(config.seed, Stream::TDrawsNu);
  auto eng_jy = make_engine(config.seed, Stream::JumpsY);

  const Eigen::VectorXd nu_prime = simulate_ou(config.ou_nu, h, draw_normals(eng_nu, n_all));
  const Eigen::VectorXd u_path = simulate_ou(config.ou_u, h, draw_normals(eng_u, n_all));
  const Eigen::VectorXd xi_path = simulate_ou(config.ou_xi, h, draw_normals(eng_xi, n_all));
  const CovariancePath cov = simulate_covariance_path(config, u_path);

  // Per-step residual vol nu_l = (1 + 0.5 |t_l|) * nu'(t_{l-1}), one t-draw per step.
  Eigen::VectorXd nu_step(n_all);
  for (int l = 0; l < n_all; ++l) {
    const double mult = 1.0 + 0.5 * std::abs(draw_t(eng_tnu, config.df));
    nu_step[l] = mult * std::max(nu_prime[l], kVolFloor);
  }

  // Jumps: X per covariate, then Y.
  std::vector<Eigen::VectorXd> x_jump_incr(p, Eigen::VectorXd::Zero(n_all));
  std::vector<std::vector<double>> x_jump_times(p);
  for (int j = 0; j < p; ++j) {
    auto eng_j = make_engine(config.seed, Stream::JumpsX, static_cast<std::uint64_t>(j));
    const JumpDraws jd = draw_jumps(eng_j, config.jump_intensity_x, config.jump_scale, config.df);
    for (std::size_t k = 0; k < jd.times.size(); ++k) {
      const int step = std::min(n_all - 1, static_cast<int>(jd.times[k] * n_all));
      x_jump_incr[j][step] += jd.sizes[k];
      x_jump_times[j].push_back(jd.times[k]);
    }
  }
  Eigen::VectorXd y_jump_incr = Eigen::VectorXd::Zero(n_all);
  std::vector<double> y_jump_times;
  {
    const JumpDraws jd = draw_jumps(eng_jy, config.jump_intensity_y, config.jump_scale, config.df);
    for (std::size_t k = 0; k < jd.times.size(); ++k) {
      const int step = std::min(n_all - 1, static_cast<int>(jd.times[k] * n_all));
      y_jump_incr[step] += jd.sizes[k];
      y_jump_times.push_back(jd.times[k]);
    }
  }

  // Coefficient paths: active coordinates start at beta_init with drift
  // mu_beta and diffusion xi(t); the rest are identically zero.
  Eigen::MatrixXd beta(n_all + 1, p);
  beta.setZero();
  for (int j = 0; j < actives; ++j) beta(0, j) = config.beta_init;
  for (int l = 0; l < n_all; ++l) {
    const Eigen::VectorXd z = draw_normals(eng_wb, actives);
    for (int j = 0; j < actives; ++j) {
      beta(l + 1, j) = beta(l, j) + config.mu_beta * h + xi_path[l] * sqrt_h * z[j];
    }
  }

  // Log-level accumulation. Continuous X increment at step l uses the left
  // grid point: sqrt(u(t_{l-1})) * chol(T) * sqrt(h) * z.
  Eigen::MatrixXd x_levels(n_all + 1, p);
  Eigen::VectorXd y_levels(n_all + 1);
  x_levels.row(0).setZero();
  y_levels[0] = 0.0;
  Eigen::VectorXd dx_cont(p);
  std::normal_distribution<double> normal01(0.0, 1.0);
  for (int l = 0; l < n_all; ++l) {
    Eigen::VectorXd z(p);
    for (int j = 0; j < p; ++j) z[j] = normal01(eng_b);
    dx_cont.noalias() = cov.chol_corr * z;
    dx_cont *= cov.sqrt_u[l] * sqrt_h;

    double dy = beta.row(l).head(actives).dot(dx_cont.head(actives));
    dy += nu_step[l] * sqrt_h * normal01(eng_w);
    dy += y_jump_incr[l];

    for (int j = 0; j < p; ++j)
      x_levels(l + 1, j) = x_levels(l, j) + dx_cont[j] + x_jump_incr[j][l];
    y_levels[l + 1] = y_levels[l] + dy;
  }

  SimOutput out;
  out.config = config;
  out.true_spot_beta = beta;
  out.x_jump_times = std::move(x_jump_times);
  out.y_jump_times = std::move(y_jump_times);

  // Trapezoidal ground truth on the generation grid.
  out.true_integrated_beta = Eigen::VectorXd::Zero(p);
  for (int l = 0; l < n_all; ++l)
    out.true_integrated_beta += 0.5 * h * (beta.row(l) + beta.row(l + 1)).transpose();

  out.panel.t.resize(n + 1);
  out.panel.y.resize(n + 1);
  out.panel.x.resize(n + 1, p);
  for (int i = 0; i <= n; ++i) {
    out.panel.t[i] = static_cast<double>(i) / n;
    out.panel.y[i] = y_levels[i * stride];
    out.panel.x.row(i) = x_levels.row(i * stride);
  }
  return out;
}

}  // namespace betaflow
