#pragma once

#include <functional>

#include "myopia/core.hpp"

namespace myopia {

/// Repeated rounds of n_games simultaneous, independent double-or-nothing
/// bets, each won with probability p.
///
/// p = 1 is accepted for simulation (a certain win); the Kelly formulas
/// themselves need p < 1.
struct GameSpec {
  double p = 0.5;
  int n_games = 1;
};

void validate(const GameSpec& game);

/// Total wealth fraction staked per round, split equally over the games.
class Allocation {
 public:
  Allocation(double total_fraction, int n_games);

  double total_fraction() const { return total_; }
  double per_game_fraction() const { return total_ / n_games_; }
  int n_games() const { return n_games_; }

 private:
  double total_;
  int n_games_;
};

/// Largest game count for which expected_log_growth enumerates outcomes.
inline constexpr int kMaxEnumeratedGames = 60;

/// Upper end of the optimizer's search interval; G(f) is singular at f = 1.
inline constexpr double kFractionCeiling = 1.0 - 1e-9;

/// Optimal fraction for a single game: max(2p - 1, 0).
double kelly_single(double p);

/// Closed-form diversified fraction (p^n - q^n) / (p^n + q^n), evaluated as
/// (1 - r) / (1 + r) with r = (q/p)^n. Requires p > 1/2.
///
/// This is the exact log-optimal fraction for n = 1 and n = 2 only. For
/// n >= 3 it falls short of the numeric optimum, see optimize_fraction.
double kelly_multi_paper(double p, int n);

/// Exact one-round expected log growth with fraction f split equally over n
/// games: sum_k C(n,k) p^k q^(n-k) log(1 + f (2k - n) / n).
double expected_log_growth(double p, int n, double f);

/// d/df of expected_log_growth, by the same binomial enumeration.
double expected_log_growth_slope(double p, int n, double f);

/// Log-optimal total fraction for n equal-split games, located in
/// [0, kFractionCeiling]. A golden-section pass narrows the bracket and
/// bisection on the sign of the slope finishes it, since G is strictly
/// concave and its value is too flat near the peak to resolve below ~1e-8.
double optimize_fraction(double p, int n, double tol = 1e-10);

/// Number of games won in one round, plus whether game 0 was won.
struct RoundOutcome {
  int wins = 0;
  bool first_won = false;
};

/// Wealth multiplier of a round when `total` is split over n games and
/// `wins` of them pay off.
inline double round_multiplier(double total, int wins, int n) {
  return 1.0 + total * static_cast<double>(2 * wins - n) / static_cast<double>(n);
}

/// Plays `rounds` rounds from wealth 1 and returns the path of log wealth;
/// wealth itself overflows a double within a few thousand rounds at the
/// optimal fraction. Each round draws all n_games outcomes from the stream
/// in order, whatever the multiplier does with them, so different bettors
/// given the same seed see the same games.
Path play_rounds(const GameSpec& game, int rounds, const Seed& seed,
                 const std::function<double(const RoundOutcome&)>& multiplier);

Path simulate_rounds(const GameSpec& game, const Allocation& alloc, int rounds, const Seed& seed);

}  // namespace myopia
