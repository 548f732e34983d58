// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "myopia/discrete_kelly.hpp"
#include "myopia/experiment.hpp"
#include "myopia/hedging.hpp"
#include "myopia/impact.hpp"
#include "myopia/lottery.hpp"
#include "myopia/sde_models.hpp"
#include "myopia/strategies.hpp"

using namespace myopia;

namespace {

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back("failed: " + what);
    }
  }
  void record(const std::string& what) { notes.push_back(what); }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.notes.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %2d  %s  (%.1f s)\n", c.ok ? "PASS" : "FAIL", id, title, secs);
  for (const std::string& n : c.notes) std::printf("        %s\n", n.c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

std::vector<double> p_grid() {
  std::vector<double> ps;
  for (int i = 0; i < 50; ++i) ps.push_back(0.505 + 0.0098 * i);
  return ps;
}

struct Moments {
  double mean = 0.0;
  double mean_se = 0.0;
  double var = 0.0;
  double var_se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = (x - m.mean) * (x - m.mean);
    m2 += d;
    m4 += d * d;
  }
  m.var = m2 / (n - 1.0);
  m.mean_se = std::sqrt(m.var / n);
  m.var_se = std::sqrt((m4 / n - (m2 / n) * (m2 / n)) / n);
  return m;
}

double enumerate_two_number_ev(const std::vector<double>& w, std::size_t number) {
  // One other player, two numbers, uniform draw, unit jackpot.
  double ev = 0.0;
  for (std::size_t pick = 0; pick < 2; ++pick) ev += w[pick] * 0.5 * (pick == number ? 0.5 : 1.0);
  return ev;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  criterion(1, "Kelly reduction: kelly_multi_paper(p, 1) = 2p - 1", [](Check& c) {
    for (double p : {0.51, 0.6, 0.75, 0.9}) {
      const double err = std::abs(kelly_multi_paper(p, 1) - (2.0 * p - 1.0));
      c.expect(err <= 1e-12, fmt("p=%.2f error %.3g", p, err));
    }
  });

  criterion(2, "two games: optimize_fraction equals the closed form", [](Check& c) {
    double worst = 0.0;
    for (double p : p_grid()) worst = std::max(worst, std::abs(optimize_fraction(p, 2, 1e-10) - kelly_multi_paper(p, 2)));
    c.record(fmt("max |numeric - closed form| over 50 p = %.3g", worst));
    c.expect(worst <= 1e-8, "max deviation <= 1e-8");
  });

  criterion(3, "optimum never below 2p - 1; whole capital employed as n grows", [](Check& c) {
    double worst = INFINITY;
    for (double p : p_grid())
      for (int n = 1; n <= 20; ++n) worst = std::min(worst, optimize_fraction(p, n) - (2.0 * p - 1.0));
    c.record(fmt("min over grid of optimize_fraction - (2p - 1) = %.3g", worst));
    c.expect(worst >= -1e-9, "optimize_fraction >= 2p - 1 - 1e-9");
    const double f50 = kelly_multi_paper(0.6, 50);
    c.record(fmt("1 - kelly_multi_paper(0.6, 50) = %.4g", 1.0 - f50));
    c.expect(f50 >= 1.0 - 1e-7, "kelly_multi_paper(0.6, 50) >= 1 - 1e-7");
  });

  criterion(4, "three games: closed form falls short of the optimum", [](Check& c) {
    const double paper = kelly_multi_paper(0.6, 3);
    const double slope = expected_log_growth_slope(0.6, 3, paper);
    const double numeric = optimize_fraction(0.6, 3, 1e-10);
    // Gap from a 40-digit binomial-sum oracle.
    constexpr double kGoldenGap = 0.55259578483447838 - 0.54285714285714286;
    c.record(fmt("closed form %.17g, optimum %.17g, gap %.6g", paper, numeric, numeric - paper));
    c.record(fmt("slope of expected log growth at the closed form %.6g", slope));
    c.expect(slope > 0.0, "slope at closed form > 0");
    c.expect(numeric > paper, "optimum > closed form");
    c.expect(std::abs((numeric - paper) - kGoldenGap) < 1e-8, "gap matches oracle to 1e-8");
  });

  criterion(5, "diversification dominance", [](Check& c) {
    double prev = -INFINITY;
    for (int n = 1; n <= 20; ++n) {
      const double g = expected_log_growth(0.6, n, optimize_fraction(0.6, n));
      c.expect(g >= prev, fmt("growth non-decreasing at n=%.0f", n));
      prev = g;
    }
    const std::vector<Policy> ps{policy::SingleGameKelly{}, policy::MultiGameKelly{}};
    const ArenaReport r = arena(ps, DiscreteMarket{GameSpec{0.6, 10}, 100000}, 100, Seed{20240601, 5}, 8);
    c.record(fmt("n=10: growth single %.6f, multi %.6f; win rate multi>single %.3f", r.stats[0].mean_log_growth,
                 r.stats[1].mean_log_growth, r.win_rate(1, 0)));
    c.expect(r.ranking.front() == 1, "MultiGameKelly ranked first");
    c.expect(r.win_rate(1, 0) > 0.9, "win rate > 0.9");
  });

  criterion(6, "lottery contrarian edge", [](Check& c) {
    LotterySpec s;
    s.popularity = {0.9, 0.1};
    s.n_other_players = 1;
    s.jackpot = 1.0;
    s.ticket_price = 0.0;
    const double expected[] = {0.275, 0.475};
    for (std::size_t i = 0; i < 2; ++i) {
      const double closed = expected_ticket_value(s, i);
      const double brute = enumerate_two_number_ev(s.popularity, i);
      c.expect(std::abs(closed - expected[i]) <= 1e-12, fmt("number %.0f closed form %.17g", i, closed));
      c.expect(std::abs(closed - brute) <= 1e-12, fmt("number %.0f enumeration %.17g", i, brute));
      const LotteryRun r = simulate_lottery(s, i, 1000000, substream(Seed{20240602, 6}, i), 8);
      const double z = (r.mean_net_payoff - closed) / r.std_error;
      c.record(fmt("number %.0f: exact %.6f, Monte Carlo %.6f +- %.6f", i, closed, r.mean_net_payoff, r.std_error) +
               fmt(" (z = %.2f)", z));
      c.expect(std::abs(z) < 3.0, fmt("number %.0f within 3 SE", i));
    }
  });

  criterion(7, "OU moment fidelity", [](Check& c) {
    const StochasticDriftParams p{0.0, 0.2, 1.0, 0.3, 0.4, 0.8, 1.0};
    const TrendOUParams trend{10.0, 1.0, 10.0, 100.0};
    const GridSpec grid{10.0, 1000};
    const int n = 10000;
    const double ts[] = {0.5, 2.0, 10.0};
    std::vector<std::vector<double>> lam(3, std::vector<double>(n)), lvl(3, std::vector<double>(n));
    parallel_for(static_cast<std::size_t>(n), 8, [&](std::size_t i) {
      const DriftPaths d = simulate_stochastic_drift(p, grid, substream(Seed{20240603, 7}, i));
      const Path s = simulate_trend_ou(trend, grid, substream(Seed{20240604, 7}, i));
      for (int j = 0; j < 3; ++j) {
        const auto k = static_cast<Eigen::Index>(std::llround(ts[j] / grid.dt()));
        lam[static_cast<std::size_t>(j)][i] = d.lambda.values()(k);
        lvl[static_cast<std::size_t>(j)][i] = s.values()(k);
      }
    });
    for (int j = 0; j < 3; ++j) {
      const double t = ts[j];
      const OuMoments a = ou_transition_moments(p.lambda0, p.lambda_hat, p.kappa, p.sigma_hat, t);
      const Moments m = moments(lam[static_cast<std::size_t>(j)]);
      const double zm = (m.mean - a.mean) / m.mean_se;
      const double zv = (m.var - a.variance) / m.var_se;
      c.record(fmt("lambda t=%.1f: mean z = %.2f, variance z = %.2f", t, zm, zv));
      c.expect(std::abs(zm) < 3.0 && std::abs(zv) < 3.0, fmt("lambda moments at t=%.1f", t));
      const double trend_mean = trend.mu * t + trend.s0 * std::exp(-trend.kappa * t);
      const double trend_var = ou_transition_moments(trend.s0, 0.0, trend.kappa, trend.sigma, t).variance;
      const Moments ms = moments(lvl[static_cast<std::size_t>(j)]);
      const double zs = (ms.mean - trend_mean) / ms.mean_se;
      const double zsv = (ms.var - trend_var) / ms.var_se;
      c.record(fmt("trending OU t=%.1f: mean z = %.2f, variance z = %.2f", t, zs, zsv));
      c.expect(std::abs(zs) < 3.0 && std::abs(zsv) < 3.0, fmt("trending OU moments at t=%.1f", t));
    }
  });

  criterion(8, "dynamic Kelly beats static Kelly", [](Check& c) {
    const StochasticDriftParams model{0.0, 0.2, 1.0, 0.3, 0.4, 0.3, 1.0};
    const std::vector<Policy> ps{policy::DynamicKellyOU{}, policy::StaticKellyOU{}};
    const ArenaReport r = arena(ps, ContinuousMarket{model, GridSpec{20.0, 2000}}, 1000, Seed{20240603, 8}, 8);
    c.record(fmt("growth dynamic %.5f, static %.5f, paired diff %.5f +- %.5f", r.stats[0].mean_log_growth,
                 r.stats[1].mean_log_growth, r.mean_growth_diff(0, 1), r.diff_std_error(0, 1)));
    c.record(fmt("t = %.2f, win rate %.3f", r.t_statistic(0, 1), r.win_rate(0, 1)));
    c.expect(r.stats[0].mean_log_growth > r.stats[1].mean_log_growth, "dynamic growth > static growth");
    c.expect(r.t_statistic(0, 1) > 3.0, "paired t > 3");
  });

  criterion(9, "gamma accrual", [](Check& c) {
    const OptionSpec call{1.0, 1.0, OptionKind::call};
    const std::vector<int> freq{50, 500, 5000};
    const auto s = hedge_study(call, HedgeConfig{0.2, 0.3, 0.0, 1}, 1.0, 0.0, 5000, freq, 10000, Seed{20240605, 9}, 8);
    for (std::size_t j = 0; j < freq.size(); ++j)
      c.record(fmt("%5.0f steps: pnl %.6f +- %.6f, accrual %.6f", freq[j], s[j].pnl.mean, s[j].pnl.std_error,
                   s[j].accrual.mean) +
               fmt(", mean |gap| %.6f", s[j].abs_gap.mean));
    const HedgeStudy& fine = s.back();
    c.expect(fine.pnl.mean > 0.0, "mean P&L > 0");
    c.record(fmt("5000 steps: mean gap %.3g +- %.3g", fine.gap.mean, fine.gap.std_error));
    c.expect(std::abs(fine.gap.mean) < 3.0 * fine.gap.std_error, "P&L within 3 SE of accrual at 5000 steps");
    c.expect(s[0].abs_gap.mean > s[1].abs_gap.mean && s[1].abs_gap.mean > s[2].abs_gap.mean, "mean |gap| shrinks");
    const auto ctl = hedge_study(call, HedgeConfig{0.2, 0.2, 0.0, 1}, 1.0, 0.0, 5000, {5000}, 10000,
                                 Seed{20240605, 10}, 8);
    c.record(fmt("control: pnl %.3g +- %.3g", ctl[0].pnl.mean, ctl[0].pnl.std_error));
    c.expect(std::abs(ctl[0].pnl.mean) < 3.0 * ctl[0].pnl.std_error, "control within 3 SE of 0");
  });

  criterion(10, "non-commutative impact", [](Check& c) {
    Rng rng(Seed{20240606, 11});
    auto random_sequence = [&](int max_len) {
      std::vector<Order> seq;
      const int len = 1 + static_cast<int>(rng.uniform() * max_len);
      double t = 0.0;
      for (int k = 0; k < len; ++k) {
        seq.push_back({rng.bernoulli(0.5) ? Side::buy : Side::sell, 0.1 + 5.0 * rng.uniform(), t});
        t += 2.0 * rng.uniform();
      }
      return seq;
    };
    double worst_linear = 0.0;
    for (int i = 0; i < 100; ++i) {
      const ImpactParams linear{0.5 + 5.0 * rng.uniform(), 1.0, 3.0 * rng.uniform(), 1.0};
      const auto a = random_sequence(5);
      const auto b = random_sequence(5);
      const CommutatorResult r = commutator(a, b, linear, MarketState{}, 2.0 * rng.uniform());
      worst_linear = std::max(worst_linear, std::abs(r.price_gap));
    }
    c.record(fmt("linear permanent impact: max |price gap| over 100 pairs %.3g", worst_linear));
    c.expect(worst_linear <= 1e-12, "linear price gap <= 1e-12");

    const CommutatorResult probe = commutator({{Side::buy, 10.0, 0.0}}, {{Side::sell, 10.0, 0.0}},
                                              ImpactParams{1.0, 0.5, 1.0, 0.5}, MarketState{}, 0.5);
    c.record(fmt("square-root probe with decay: price gap %.12g", probe.price_gap));
    c.expect(probe.price_gap != 0.0 && std::abs(probe.price_gap) > 1e-6, "probe price gap nonzero");

    double worst_trip = -INFINITY;
    for (int i = 0; i < 1000; ++i) {
      const ImpactParams p{0.5 + 5.0 * rng.uniform(), 0.05 + 0.95 * rng.uniform(), 3.0 * rng.uniform(), rng.uniform()};
      const double x = 0.1 + 10.0 * rng.uniform();
      const double wait = 2.0 * rng.uniform();
      const bool buy_first = rng.bernoulli(0.5);
      const Side open = buy_first ? Side::buy : Side::sell;
      const Side close = buy_first ? Side::sell : Side::buy;
      const MarketState s = run_sequence(MarketState{}, {{open, x, 0.0}, {close, x, wait}}, 0.0, p);
      // Relative to the traded notional; exact zero cases leave rounding dust.
      worst_trip = std::max(worst_trip, s.cash / (x * 100.0));
    }
    c.record(fmt("max net cash / notional over 1000 round trips %.3g", worst_trip));
    c.expect(worst_trip <= 1e-14, "round-trip net cash <= 0");
  });

  criterion(11, "determinism across thread counts", [](Check& c) {
    const auto base = std::filesystem::temp_directory_path() / "myopia_acceptance";
    std::filesystem::remove_all(base);
    for (const std::string& name : cli::preset_names()) {
      std::string csv[2];
      for (int k = 0; k < 2; ++k) {
        cli::json doc = cli::preset(name);
        doc["threads"] = k == 0 ? 1 : 8;
        doc["output_dir"] = (base / (name + std::to_string(k))).string();
        std::ostringstream log;
        const int rc = cli::run(cli::parse_config(doc), log);
        c.expect(rc == cli::kExitOk, name + " exit status 0");
        csv[k] = slurp(base / (name + std::to_string(k)) / "results.csv");
      }
      const bool same = !csv[0].empty() && csv[0] == csv[1];
      c.record(name + ": " + std::to_string(csv[0].size()) + " bytes, " + (same ? "identical" : "DIFFERENT"));
      c.expect(same, name + " byte-identical");
    }
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
