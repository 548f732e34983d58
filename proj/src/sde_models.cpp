#include "myopia/sde_models.hpp"

#include <cmath>
#include <stdexcept>

namespace myopia {

void validate(const StochasticDriftParams& p) {
  if (!(p.sigma > 0.0)) throw std::invalid_argument("StochasticDriftParams: sigma must be positive");
  if (!(p.kappa > 0.0)) throw std::invalid_argument("StochasticDriftParams: kappa must be positive");
  if (!(p.sigma_hat >= 0.0)) throw std::invalid_argument("StochasticDriftParams: sigma_hat must be >= 0");
  if (!(p.s0 > 0.0)) throw std::invalid_argument("StochasticDriftParams: s0 must be positive");
  if (!std::isfinite(p.r) || !std::isfinite(p.lambda_hat) || !std::isfinite(p.lambda0))
    throw std::invalid_argument("StochasticDriftParams: non-finite parameter");
}

void validate(const TrendOUParams& p) {
  if (!(p.kappa > 0.0)) throw std::invalid_argument("TrendOUParams: kappa must be positive");
  if (!(p.sigma > 0.0)) throw std::invalid_argument("TrendOUParams: sigma must be positive");
  if (!std::isfinite(p.mu) || !std::isfinite(p.s0)) throw std::invalid_argument("TrendOUParams: non-finite parameter");
}

void validate(const GbmParams& p) {
  if (!(p.sigma >= 0.0)) throw std::invalid_argument("GbmParams: sigma must be >= 0");
  if (!(p.s0 > 0.0)) throw std::invalid_argument("GbmParams: s0 must be positive");
  if (!std::isfinite(p.mu)) throw std::invalid_argument("GbmParams: non-finite mu");
}

void validate(const GridSpec& g) {
  if (!(g.t_end > 0.0)) throw std::invalid_argument("GridSpec: t_end must be positive");
  if (g.n_steps < 1) throw std::invalid_argument("GridSpec: n_steps must be >= 1");
}

OuMoments ou_transition_moments(double x0, double mean, double kappa, double vol, double t) {
  return {mean + (x0 - mean) * std::exp(-kappa * t), vol * vol * -std::expm1(-2.0 * kappa * t) / (2.0 * kappa)};
}

DriftPaths simulate_stochastic_drift(const StochasticDriftParams& p, const GridSpec& grid, const Seed& seed) {
  validate(p);
  validate(grid);
  Rng price_noise(derive_stream(seed, "price"));
  Rng lambda_noise(derive_stream(seed, "lambda"));
  const Vector times = uniform_times(grid.t_end, grid.n_steps);
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  const double half_var = 0.5 * p.sigma * p.sigma;

  Vector price(grid.n_steps + 1);
  Vector lambda(grid.n_steps + 1);
  double log_s = std::log(p.s0);
  price(0) = p.s0;
  lambda(0) = p.lambda0;
  for (int i = 0; i < grid.n_steps; ++i) {
    const double z_price = price_noise.normal();
    const double z_lambda = lambda_noise.normal();
    log_s += (p.r + p.sigma * lambda(i) - half_var) * dt + p.sigma * sqrt_dt * z_price;
    price(i + 1) = std::exp(log_s);
    lambda(i + 1) = ou_step_exact(lambda(i), p.lambda_hat, p.kappa, p.sigma_hat, dt, z_lambda);
  }
  return {Path(times, std::move(price)), Path(times, std::move(lambda))};
}

Path simulate_trend_ou(const TrendOUParams& p, const GridSpec& grid, const Seed& seed) {
  validate(p);
  validate(grid);
  Rng noise(seed);
  Vector times = uniform_times(grid.t_end, grid.n_steps);
  const double dt = grid.dt();
  Vector values(grid.n_steps + 1);
  double x = p.s0;
  values(0) = p.s0;
  for (int i = 0; i < grid.n_steps; ++i) {
    x = ou_step_exact(x, 0.0, p.kappa, p.sigma, dt, noise.normal());
    values(i + 1) = x + p.mu * times(i + 1);
  }
  return Path(std::move(times), std::move(values));
}

Path simulate_gbm(const GbmParams& p, const GridSpec& grid, const Seed& seed) {
  validate(p);
  validate(grid);
  Rng noise(seed);
  Vector times = uniform_times(grid.t_end, grid.n_steps);
  const double sqrt_dt = std::sqrt(grid.dt());
  const double drift = p.mu - 0.5 * p.sigma * p.sigma;
  Vector values(grid.n_steps + 1);
  values(0) = p.s0;
  double brownian = 0.0;
  for (int i = 1; i <= grid.n_steps; ++i) {
    brownian += sqrt_dt * noise.normal();
    values(i) = p.s0 * std::exp(drift * times(i) + p.sigma * brownian);
  }
  return Path(std::move(times), std::move(values));
}

}  // namespace myopia
