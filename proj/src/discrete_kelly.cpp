#include "myopia/discrete_kelly.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "myopia/golden_section.hpp"

namespace myopia {

namespace {

void require_probability(double p, const char* where) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument(std::string(where) + ": p must lie in (0, 1)");
}

void require_enumerable(int n, const char* where) {
  if (n < 1) throw std::invalid_argument(std::string(where) + ": n must be >= 1");
  if (n > kMaxEnumeratedGames)
    throw std::invalid_argument(std::string(where) + ": n = " + std::to_string(n) +
                                " exceeds the enumeration limit of " + std::to_string(kMaxEnumeratedGames) +
                                "; estimate the growth rate by Monte Carlo (simulate_rounds) instead");
}

// Binomial(n, p) weights through log-gamma.
std::vector<double> binomial_weights(double p, int n) {
  std::vector<double> w(n + 1);
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k) {
    w[k] = std::exp(log_n_fact - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * log_p + (n - k) * log_q);
  }
  return w;
}

void require_fraction(double f, const char* where) {
  if (!(f >= 0.0)) throw std::invalid_argument(std::string(where) + ": f must be >= 0");
  if (!(f < 1.0)) throw std::invalid_argument(std::string(where) + ": f must be < 1 (total loss would be possible)");
}

}  // namespace

void validate(const GameSpec& game) {
  if (!(game.p > 0.0 && game.p <= 1.0)) throw std::invalid_argument("GameSpec: p must lie in (0, 1]");
  if (game.n_games < 1) throw std::invalid_argument("GameSpec: n_games must be >= 1");
}

Allocation::Allocation(double total_fraction, int n_games) : total_(total_fraction), n_games_(n_games) {
  if (n_games < 1) throw std::invalid_argument("Allocation: n_games must be >= 1");
  if (!(total_fraction >= 0.0 && total_fraction < 1.0))
    throw std::invalid_argument("Allocation: total_fraction must lie in [0, 1)");
}

double kelly_single(double p) {
  require_probability(p, "kelly_single");
  return std::max(2.0 * p - 1.0, 0.0);
}

double kelly_multi_paper(double p, int n) {
  require_probability(p, "kelly_multi_paper");
  if (!(p > 0.5)) throw std::invalid_argument("kelly_multi_paper: formula holds for p > 1/2 only");
  if (n < 1) throw std::invalid_argument("kelly_multi_paper: n must be >= 1");
  if (n == 1) return 2.0 * p - 1.0;
  const double r = std::pow((1.0 - p) / p, n);
  return (1.0 - r) / (1.0 + r);
}

double expected_log_growth(double p, int n, double f) {
  require_probability(p, "expected_log_growth");
  require_enumerable(n, "expected_log_growth");
  require_fraction(f, "expected_log_growth");
  const std::vector<double> w = binomial_weights(p, n);
  double g = 0.0;
  for (int k = 0; k <= n; ++k) g += w[k] * std::log1p(f * (2.0 * k - n) / n);
  return g;
}

double expected_log_growth_slope(double p, int n, double f) {
  require_probability(p, "expected_log_growth_slope");
  require_enumerable(n, "expected_log_growth_slope");
  require_fraction(f, "expected_log_growth_slope");
  const std::vector<double> w = binomial_weights(p, n);
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double x = (2.0 * k - n) / n;
    s += w[k] * x / (1.0 + f * x);
  }
  return s;
}

double optimize_fraction(double p, int n, double tol) {
  require_probability(p, "optimize_fraction");
  if (!(p > 0.5)) throw std::invalid_argument("optimize_fraction: requires p > 1/2");
  require_enumerable(n, "optimize_fraction");
  if (!(tol > 0.0)) throw std::invalid_argument("optimize_fraction: tol must be positive");

  const std::vector<double> w = binomial_weights(p, n);
  auto growth = [&](double f) {
    double g = 0.0;
    for (int k = 0; k <= n; ++k) g += w[k] * std::log1p(f * (2.0 * k - n) / n);
    return g;
  };
  auto slope = [&](double f) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double x = (2.0 * k - n) / n;
      s += w[k] * x / (1.0 + f * x);
    }
    return s;
  };

  const GoldenSectionResult coarse = golden_section_maximize(growth, 0.0, kFractionCeiling, std::max(tol, 1e-6));
  double lo = coarse.lower;
  double hi = coarse.upper;
  if (slope(lo) <= 0.0) return lo;
  if (slope(hi) >= 0.0) return hi;
  while (hi - lo > tol / 4.0) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Path play_rounds(const GameSpec& game, int rounds, const Seed& seed,
                 const std::function<double(const RoundOutcome&)>& multiplier) {
  validate(game);
  if (rounds < 1) throw std::invalid_argument("play_rounds: rounds must be >= 1");
  Rng rng(seed);
  Vector times(rounds + 1);
  Vector log_wealth(rounds + 1);
  times(0) = 0.0;
  log_wealth(0) = 0.0;
  for (int r = 1; r <= rounds; ++r) {
    RoundOutcome outcome;
    for (int g = 0; g < game.n_games; ++g) {
      const bool won = rng.bernoulli(game.p);
      outcome.wins += won ? 1 : 0;
      if (g == 0) outcome.first_won = won;
    }
    times(r) = static_cast<double>(r);
    log_wealth(r) = log_wealth(r - 1) + std::log(multiplier(outcome));
  }
  return Path(std::move(times), std::move(log_wealth));
}

Path simulate_rounds(const GameSpec& game, const Allocation& alloc, int rounds, const Seed& seed) {
  validate(game);
  if (alloc.n_games() != game.n_games) throw std::invalid_argument("simulate_rounds: allocation is for a different game count");
  const double total = alloc.total_fraction();
  const int n = game.n_games;
  return play_rounds(game, rounds, seed, [=](const RoundOutcome& o) { return round_multiplier(total, o.wins, n); });
}

}  // namespace myopia
