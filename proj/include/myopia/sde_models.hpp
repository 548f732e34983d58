#pragma once

#include <cmath>

#include "myopia/core.hpp"

namespace myopia {

/// Price with an Ornstein-Uhlenbeck market price of risk:
///   dS/S = (r + sigma lambda) dt + sigma dW
///   d lambda = kappa (lambda_hat - lambda) dt + sigma_hat dW'
/// with W and W' independent.
struct StochasticDriftParams {
  double r = 0.0;
  double sigma = 0.2;
  double kappa = 1.0;
  double lambda_hat = 0.3;
  double sigma_hat = 0.4;
  double lambda0 = 0.3;
  double s0 = 1.0;
};

/// dS = (mu - kappa (S - mu t)) dt + sigma dW, which reverts to the line mu t.
struct TrendOUParams {
  double mu = 10.0;
  double kappa = 1.0;
  double sigma = 10.0;
  double s0 = 100.0;
};

struct GbmParams {
  double mu = 0.05;
  double sigma = 0.2;
  double s0 = 1.0;
};

struct GridSpec {
  double t_end = 10.0;
  int n_steps = 2500;

  double dt() const { return t_end / n_steps; }
};

void validate(const StochasticDriftParams& params);
void validate(const TrendOUParams& params);
void validate(const GbmParams& params);
void validate(const GridSpec& grid);

/// Exact OU transition over dt given a standard normal draw z.
inline double ou_step_exact(double x, double mean, double kappa, double vol, double dt, double z) {
  const double decay = std::exp(-kappa * dt);
  return mean + (x - mean) * decay + vol * std::sqrt(-std::expm1(-2.0 * kappa * dt) / (2.0 * kappa)) * z;
}

/// Conditional mean and variance of an OU process after time t.
struct OuMoments {
  double mean = 0.0;
  double variance = 0.0;
};
OuMoments ou_transition_moments(double x0, double mean, double kappa, double vol, double t);

struct DriftPaths {
  Path price;
  Path lambda;
};

/// Lambda by exact OU steps on the "lambda" stream; log-price on the
/// "price" stream with lambda frozen at the start of each step.
DriftPaths simulate_stochastic_drift(const StochasticDriftParams& params, const GridSpec& grid, const Seed& seed);

/// Steps X = S - mu t as a zero-mean OU process and returns X + mu t.
Path simulate_trend_ou(const TrendOUParams& params, const GridSpec& grid, const Seed& seed);

/// Exact log-normal stepping: S_t = s0 exp((mu - sigma^2/2) t + sigma W_t).
Path simulate_gbm(const GbmParams& params, const GridSpec& grid, const Seed& seed);

}  // namespace myopia
