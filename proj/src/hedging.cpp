#include "myopia/hedging.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "myopia/sde_models.hpp"

namespace myopia {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double payoff(const OptionSpec& spec, double spot) {
  return spec.kind == OptionKind::call ? std::max(spot - spec.strike, 0.0) : std::max(spec.strike - spot, 0.0);
}

}  // namespace

void validate(const OptionSpec& spec) {
  if (!(spec.strike > 0.0)) throw std::invalid_argument("OptionSpec: strike must be positive");
  if (!(spec.maturity > 0.0)) throw std::invalid_argument("OptionSpec: maturity must be positive");
}

void validate(const HedgeConfig& c) {
  if (!(c.implied_vol > 0.0)) throw std::invalid_argument("HedgeConfig: implied_vol must be positive");
  if (!(c.realized_vol >= 0.0)) throw std::invalid_argument("HedgeConfig: realized_vol must be >= 0");
  if (c.rehedge_steps < 1) throw std::invalid_argument("HedgeConfig: rehedge_steps must be >= 1");
  if (!std::isfinite(c.rate)) throw std::invalid_argument("HedgeConfig: rate must be finite");
}

Greeks bs_value_delta_gamma(double spot, const OptionSpec& spec, double vol, double rate, double t) {
  if (!(spot > 0.0)) throw std::invalid_argument("bs_value_delta_gamma: spot must be positive");
  if (!(vol > 0.0)) throw std::invalid_argument("bs_value_delta_gamma: vol must be positive");
  const double tau = spec.maturity - t;
  const bool call = spec.kind == OptionKind::call;
  if (!(tau > 0.0)) {
    Greeks g;
    g.value = payoff(spec, spot);
    if (call) g.delta = spot > spec.strike ? 1.0 : 0.0;
    else g.delta = spot < spec.strike ? -1.0 : 0.0;
    return g;
  }
  const double vol_sqrt = vol * std::sqrt(tau);
  const double d1 = (std::log(spot / spec.strike) + (rate + 0.5 * vol * vol) * tau) / vol_sqrt;
  const double d2 = d1 - vol_sqrt;
  const double discount = std::exp(-rate * tau);
  Greeks g;
  g.gamma = normal_pdf(d1) / (spot * vol_sqrt);
  if (call) {
    g.value = spot * normal_cdf(d1) - spec.strike * discount * normal_cdf(d2);
    g.delta = normal_cdf(d1);
  } else {
    g.value = spec.strike * discount * normal_cdf(-d2) - spot * normal_cdf(-d1);
    g.delta = normal_cdf(d1) - 1.0;
  }
  return g;
}

HedgeReport delta_hedge_pnl(const Path& path, const OptionSpec& spec, const HedgeConfig& config, bool keep_series) {
  validate(spec);
  validate(config);
  const Vector& t = path.times();
  const Vector& s = path.values();
  const Eigen::Index n_steps = path.size() - 1;
  if (std::abs(t(0)) > 1e-12 || std::abs(t(n_steps) - spec.maturity) > 1e-9 * spec.maturity)
    throw std::invalid_argument("delta_hedge_pnl: path grid must run from 0 to the option maturity");
  if (n_steps % config.rehedge_steps != 0)
    throw std::invalid_argument("delta_hedge_pnl: path steps must be a multiple of rehedge_steps");
  const Eigen::Index stride = n_steps / config.rehedge_steps;
  const int m = config.rehedge_steps;
  const double r = config.rate;
  const double vol_i = config.implied_vol;
  const double var_gap = config.realized_vol * config.realized_vol - vol_i * vol_i;

  HedgeReport rep;
  if (keep_series) {
    rep.times.resize(m);
    rep.spot.resize(m);
    rep.gamma.resize(m);
    rep.hedge_position.resize(m);
  }

  double cash = 0.0;
  double delta = 0.0;
  double accrual = 0.0;
  for (int k = 0; k < m; ++k) {
    const Eigen::Index i = k * stride;
    const double tk = t(i);
    const double sk = s(i);
    const Greeks g = bs_value_delta_gamma(sk, spec, vol_i, r, tk);
    if (k == 0) {
      cash = -g.value + g.delta * sk;
    } else {
      cash = cash * std::exp(r * (tk - t(i - stride))) + (g.delta - delta) * sk;
    }
    delta = g.delta;
    const double dt = t(i + stride) - tk;
    accrual += 0.5 * g.gamma * sk * sk * var_gap * dt * std::exp(r * (spec.maturity - t(i + stride)));
    if (keep_series) {
      rep.times(k) = tk;
      rep.spot(k) = sk;
      rep.gamma(k) = g.gamma;
      rep.hedge_position(k) = -g.delta;
    }
  }
  const double s_end = s(n_steps);
  cash *= std::exp(r * (t(n_steps) - t(n_steps - stride)));
  rep.realized_pnl = payoff(spec, s_end) - delta * s_end + cash;
  rep.predicted_accrual = accrual;
  rep.gap = rep.realized_pnl - rep.predicted_accrual;
  return rep;
}

std::vector<HedgeStudy> hedge_study(const OptionSpec& spec, const HedgeConfig& config, double s0, double drift,
                                    int path_steps, const std::vector<int>& rehedge_steps, int n_paths,
                                    const Seed& seed, unsigned threads) {
  validate(spec);
  validate(config);
  if (n_paths < 1) throw std::invalid_argument("hedge_study: n_paths must be >= 1");
  if (rehedge_steps.empty()) throw std::invalid_argument("hedge_study: no rehedge frequencies given");
  for (int h : rehedge_steps)
    if (h < 1 || path_steps % h != 0)
      throw std::invalid_argument("hedge_study: each rehedge frequency must divide path_steps");

  const std::size_t n_freq = rehedge_steps.size();
  const auto n = static_cast<std::size_t>(n_paths);
  std::vector<std::vector<HedgeReport>> results(n_freq, std::vector<HedgeReport>(n));
  const GbmParams gbm{drift, config.realized_vol, s0};
  const GridSpec grid{spec.maturity, path_steps};
  parallel_for(n, threads, [&](std::size_t i) {
    const Path path = simulate_gbm(gbm, grid, substream(seed, i));
    for (std::size_t j = 0; j < n_freq; ++j) {
      HedgeConfig c = config;
      c.rehedge_steps = rehedge_steps[j];
      results[j][i] = delta_hedge_pnl(path, spec, c, false);
    }
  });

  std::vector<HedgeStudy> out(n_freq);
  std::vector<double> pnl(n), acc(n), gap(n), abs_gap(n);
  for (std::size_t j = 0; j < n_freq; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      pnl[i] = results[j][i].realized_pnl;
      acc[i] = results[j][i].predicted_accrual;
      gap[i] = results[j][i].gap;
      abs_gap[i] = std::abs(gap[i]);
    }
    out[j] = {mean_and_error(pnl), mean_and_error(acc), mean_and_error(gap), mean_and_error(abs_gap)};
  }
  return out;
}

}  // namespace myopia
