#pragma once

#include <vector>

#include "myopia/core.hpp"

namespace myopia {

enum class OptionKind { call, put };

struct OptionSpec {
  double strike = 1.0;
  double maturity = 1.0;
  OptionKind kind = OptionKind::call;
};

struct HedgeConfig {
  double implied_vol = 0.2;
  double realized_vol = 0.2;
  double rate = 0.0;
  int rehedge_steps = 500;
};

void validate(const OptionSpec& spec);
void validate(const HedgeConfig& config);

struct Greeks {
  double value = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
};

/// Black-Scholes value, delta and gamma at calendar time t. At or after
/// maturity returns intrinsic value, delta in {0, +-1} and zero gamma.
Greeks bs_value_delta_gamma(double spot, const OptionSpec& spec, double vol, double rate, double t);

/// Outcome of hedging one path. gap == realized_pnl - predicted_accrual.
struct HedgeReport {
  double realized_pnl = 0.0;
  double predicted_accrual = 0.0;
  double gap = 0.0;
  Vector times;  // rehedge dates, maturity excluded
  Vector spot;
  Vector gamma;
  Vector hedge_position;  // shares held, i.e. -delta
};

/// Long one option bought at the implied vol and delta-hedged at that vol
/// on `rehedge_steps` equal intervals, cash financed at the rate.
///
/// realized_pnl is the terminal value of option + short stock + cash; the
/// premium is borrowed at t = 0, so this is already net of the premium
/// accrued at the rate.
///
/// predicted_accrual = sum_k 1/2 Gamma_k S_k^2 (sigma_r^2 - sigma_i^2) dt,
/// each term carried to maturity at the rate. Gamma is taken at the implied
/// vol, and S^2 makes it dollar gamma so the sum is in P&L units.
///
/// The path must start at t = 0, end at maturity, and have a step count
/// divisible by rehedge_steps.
HedgeReport delta_hedge_pnl(const Path& path, const OptionSpec& spec, const HedgeConfig& config,
                            bool keep_series = true);

struct HedgeStudy {
  MeanError pnl;
  MeanError accrual;
  MeanError gap;
  MeanError abs_gap;
};

/// Hedges `n_paths` GBM paths (drift `drift`, vol = realized_vol, n_steps
/// steps) at each requested rehedge frequency; entry j of the result goes
/// with rehedge_steps[j]. All frequencies see the same paths.
std::vector<HedgeStudy> hedge_study(const OptionSpec& spec, const HedgeConfig& config, double s0, double drift,
                                    int path_steps, const std::vector<int>& rehedge_steps, int n_paths,
                                    const Seed& seed, unsigned threads = 1);

}  // namespace myopia
