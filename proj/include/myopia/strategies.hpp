#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "myopia/core.hpp"
#include "myopia/discrete_kelly.hpp"
#include "myopia/sde_models.hpp"

namespace myopia {

namespace policy {

/// Constant fraction of wealth at risk. In the discrete game it is split
/// equally over all games.
struct FixedFraction {
  double fraction = 0.0;
};

/// Stakes 2p - 1 on game 0 and ignores the others: the local optimizer.
struct SingleGameKelly {};

enum class MultiSource { paper_formula, numeric_optimum };

/// Stakes the diversified fraction, split equally over all games.
struct MultiGameKelly {
  MultiSource source = MultiSource::numeric_optimum;
};

/// lambda_t / sigma, reading the current market price of risk.
struct DynamicKellyOU {};

/// lambda_hat / sigma, using the long-run mean only.
struct StaticKellyOU {};

/// Fully invested, never exits.
struct BuyAndHold {};

/// Log-optimal fraction on the trending OU price level,
///   f = clamp(scale * S (m_t - r S) / sigma^2, -cap, cap),
/// with m_t = mu - kappa (S - mu t) the instantaneous drift.
struct TrendReversion {
  double leverage_cap = 1.0;
  double scale = 1.0;
};

/// Kelly fraction from the mean and variance of the last `window` log
/// returns. Needs no model knowledge; stays out of the market until two
/// returns are available.
struct RollingDriftKelly {
  int window = 250;
  double leverage_cap = 5.0;
};

}  // namespace policy

using Policy = std::variant<policy::FixedFraction, policy::SingleGameKelly, policy::MultiGameKelly, policy::DynamicKellyOU,
                            policy::StaticKellyOU, policy::BuyAndHold, policy::TrendReversion, policy::RollingDriftKelly>;

/// Canonical text form, e.g. "multi_game_kelly:numeric" or "fixed:0.25".
/// parse_policy(policy_name(p)) reproduces p.
std::string policy_name(const Policy& p);
Policy parse_policy(std::string_view text);

bool is_discrete_policy(const Policy& p);
bool is_continuous_policy(const Policy& p);

/// Total fraction a discrete-game policy stakes per round.
double discrete_fraction(const Policy& p, const GameSpec& game);

/// Log-wealth path of a discrete policy, starting at 0. The game outcomes
/// depend only on (game, rounds, seed), so all policies on one seed are
/// paired.
Path backtest_discrete(const Policy& p, const GameSpec& game, int rounds, const Seed& seed);

struct TrendOUMarket {
  TrendOUParams params;
  double r = 0.0;
};

struct GbmMarket {
  GbmParams params;
  double r = 0.0;
};

using ContinuousModel = std::variant<StochasticDriftParams, TrendOUMarket, GbmMarket>;

double model_rate(const ContinuousModel& model);

inline constexpr double kBankruptcyFloor = 1e-12;

struct BacktestResult {
  Path wealth;
  Vector fractions;  // fraction held over [t_k, t_k+1)
  bool bankrupt = false;
  double bankrupt_time = std::numeric_limits<double>::quiet_NaN();
};

/// Self-financing backtest with rebalancing at every grid point:
///   W_k+1 = W_k (1 + f_k (S_k+1 / S_k - 1) + (1 - f_k) r dt).
/// A step that would take wealth to zero or below marks bankruptcy and
/// pins wealth at kBankruptcyFloor from then on.
BacktestResult backtest_continuous(const Policy& p, const Path& price, const Path* lambda, const ContinuousModel& model);

struct DiscreteMarket {
  GameSpec game;
  int rounds = 10'000;
};

struct ContinuousMarket {
  ContinuousModel model;
  GridSpec grid;
};

using MarketSpec = std::variant<DiscreteMarket, ContinuousMarket>;

/// Policies raced on identical market randomness, seed by seed.
struct ArenaReport {
  std::vector<std::string> names;
  std::vector<SummaryStats> stats;
  std::vector<std::size_t> bankruptcies;
  /// (a, b): share of seeds where a ends richer than b; ties count 1/2.
  Eigen::MatrixXd win_rate;
  /// (a, b): mean over seeds of growth_a - growth_b, and its standard error.
  Eigen::MatrixXd mean_growth_diff;
  Eigen::MatrixXd diff_std_error;
  /// Policy indices, best mean_log_growth first; ties by name.
  std::vector<std::size_t> ranking;
  /// Cross-seed mean of log wealth at sample_times, one row per policy.
  Vector sample_times;
  Eigen::MatrixXd mean_log_wealth;
  std::size_t n_seeds = 0;

  double t_statistic(std::size_t a, std::size_t b) const;
};

ArenaReport arena(std::span<const Policy> policies, const MarketSpec& market, int n_seeds, const Seed& seed,
                  unsigned threads = 1);

}  // namespace myopia
