#include "myopia/strategies.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace myopia {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

double parse_number(std::string_view text, std::string_view whole) {
  double x = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || end != text.data() + text.size())
    throw std::invalid_argument("parse_policy: bad number '" + std::string(text) + "' in '" + std::string(whole) + "'");
  return x;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double clamp_cap(double f, double cap) { return std::clamp(f, -cap, cap); }

}  // namespace

std::string policy_name(const Policy& p) {
  return std::visit(
      overloaded{
          [](const policy::FixedFraction& x) { return "fixed:" + format_number(x.fraction); },
          [](const policy::SingleGameKelly&) { return std::string("single_game_kelly"); },
          [](const policy::MultiGameKelly& x) {
            return std::string(x.source == policy::MultiSource::paper_formula ? "multi_game_kelly:paper"
                                                                              : "multi_game_kelly:numeric");
          },
          [](const policy::DynamicKellyOU&) { return std::string("dynamic_kelly_ou"); },
          [](const policy::StaticKellyOU&) { return std::string("static_kelly_ou"); },
          [](const policy::BuyAndHold&) { return std::string("buy_and_hold"); },
          [](const policy::TrendReversion& x) {
            std::string s = "trend_reversion:" + format_number(x.leverage_cap);
            if (x.scale != 1.0) s += ":" + format_number(x.scale);
            return s;
          },
          [](const policy::RollingDriftKelly& x) {
            return "rolling_drift:" + std::to_string(x.window) + ":" + format_number(x.leverage_cap);
          },
      },
      p);
}

Policy parse_policy(std::string_view text) {
  const std::vector<std::string_view> parts = split(text, ':');
  const std::string_view head = parts[0];
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() - 1 < lo || parts.size() - 1 > hi)
      throw std::invalid_argument("parse_policy: wrong number of arguments in '" + std::string(text) + "'");
  };
  if (head == "fixed") {
    arity(1, 1);
    return policy::FixedFraction{parse_number(parts[1], text)};
  }
  if (head == "single_game_kelly") {
    arity(0, 0);
    return policy::SingleGameKelly{};
  }
  if (head == "multi_game_kelly") {
    arity(0, 1);
    if (parts.size() == 1 || parts[1] == "numeric") return policy::MultiGameKelly{policy::MultiSource::numeric_optimum};
    if (parts[1] == "paper") return policy::MultiGameKelly{policy::MultiSource::paper_formula};
    throw std::invalid_argument("parse_policy: multi_game_kelly source must be 'numeric' or 'paper'");
  }
  if (head == "dynamic_kelly_ou") {
    arity(0, 0);
    return policy::DynamicKellyOU{};
  }
  if (head == "static_kelly_ou") {
    arity(0, 0);
    return policy::StaticKellyOU{};
  }
  if (head == "buy_and_hold") {
    arity(0, 0);
    return policy::BuyAndHold{};
  }
  if (head == "trend_reversion") {
    arity(0, 2);
    policy::TrendReversion tr;
    if (parts.size() > 1) tr.leverage_cap = parse_number(parts[1], text);
    if (parts.size() > 2) tr.scale = parse_number(parts[2], text);
    if (!(tr.leverage_cap > 0.0)) throw std::invalid_argument("parse_policy: leverage cap must be positive");
    return tr;
  }
  if (head == "rolling_drift") {
    arity(0, 2);
    policy::RollingDriftKelly rd;
    if (parts.size() > 1) rd.window = static_cast<int>(parse_number(parts[1], text));
    if (parts.size() > 2) rd.leverage_cap = parse_number(parts[2], text);
    if (rd.window < 2 || !(rd.leverage_cap > 0.0))
      throw std::invalid_argument("parse_policy: rolling_drift needs window >= 2 and a positive cap");
    return rd;
  }
  throw std::invalid_argument("parse_policy: unknown policy '" + std::string(text) + "'");
}

bool is_discrete_policy(const Policy& p) {
  return std::holds_alternative<policy::FixedFraction>(p) || std::holds_alternative<policy::SingleGameKelly>(p) ||
         std::holds_alternative<policy::MultiGameKelly>(p);
}

bool is_continuous_policy(const Policy& p) {
  return std::holds_alternative<policy::FixedFraction>(p) || !is_discrete_policy(p);
}

double discrete_fraction(const Policy& p, const GameSpec& game) {
  validate(game);
  return std::visit(
      overloaded{
          [&](const policy::FixedFraction& x) {
            if (!(x.fraction >= 0.0 && x.fraction < 1.0))
              throw std::invalid_argument("backtest_discrete: fixed fraction must lie in [0, 1)");
            return x.fraction;
          },
          [&](const policy::SingleGameKelly&) { return kelly_single(game.p); },
          [&](const policy::MultiGameKelly& x) {
            if (game.n_games == 1 || game.p <= 0.5) return kelly_single(game.p);
            const double f = x.source == policy::MultiSource::paper_formula ? kelly_multi_paper(game.p, game.n_games)
                                                                            : optimize_fraction(game.p, game.n_games);
            return std::min(f, kFractionCeiling);
          },
          [&](const auto&) -> double {
            throw std::invalid_argument("backtest_discrete: '" + policy_name(p) + "' is a continuous-market policy");
          },
      },
      p);
}

Path backtest_discrete(const Policy& p, const GameSpec& game, int rounds, const Seed& seed) {
  const double f = discrete_fraction(p, game);
  const int n = game.n_games;
  if (std::holds_alternative<policy::SingleGameKelly>(p) || n == 1) {
    return play_rounds(game, rounds, seed,
                       [f](const RoundOutcome& o) { return round_multiplier(f, o.first_won ? 1 : 0, 1); });
  }
  return play_rounds(game, rounds, seed, [f, n](const RoundOutcome& o) { return round_multiplier(f, o.wins, n); });
}

double model_rate(const ContinuousModel& model) {
  return std::visit(overloaded{[](const StochasticDriftParams& m) { return m.r; },
                               [](const TrendOUMarket& m) { return m.r; }, [](const GbmMarket& m) { return m.r; }},
                    model);
}

BacktestResult backtest_continuous(const Policy& p, const Path& price, const Path* lambda, const ContinuousModel& model) {
  if (!is_continuous_policy(p))
    throw std::invalid_argument("backtest_continuous: '" + policy_name(p) + "' is a discrete-game policy");
  if (lambda && !same_grid(price, *lambda)) throw std::invalid_argument("backtest_continuous: price and lambda grids differ");
  const Vector& t = price.times();
  const Vector& s = price.values();
  if ((s.array() <= 0.0).any()) throw std::invalid_argument("backtest_continuous: price path must stay positive");
  const Eigen::Index n_steps = price.size() - 1;
  if (n_steps < 1) throw std::invalid_argument("backtest_continuous: price path needs at least two points");
  const double r = model_rate(model);

  const auto* drift_model = std::get_if<StochasticDriftParams>(&model);
  const auto* trend_model = std::get_if<TrendOUMarket>(&model);
  const auto* gbm_model = std::get_if<GbmMarket>(&model);

  // Returns f_k, the fraction held over [t_k, t_k+1).
  auto fraction_at = [&](Eigen::Index k) -> double {
    return std::visit(
        overloaded{
            [](const policy::FixedFraction& x) { return x.fraction; },
            [](const policy::BuyAndHold&) { return 1.0; },
            [&](const policy::DynamicKellyOU&) -> double {
              if (!drift_model) throw std::invalid_argument("dynamic_kelly_ou needs the stochastic-drift market");
              if (!lambda) throw std::invalid_argument("dynamic_kelly_ou needs the lambda path");
              return lambda->values()(k) / drift_model->sigma;
            },
            [&](const policy::StaticKellyOU&) -> double {
              if (drift_model) return drift_model->lambda_hat / drift_model->sigma;
              if (gbm_model) {
                const GbmParams& g = gbm_model->params;
                return (g.mu - r) / (g.sigma * g.sigma);
              }
              throw std::invalid_argument("static_kelly_ou is undefined on the trending OU market");
            },
            [&](const policy::TrendReversion& x) -> double {
              if (!trend_model) throw std::invalid_argument("trend_reversion needs the trending OU market");
              const TrendOUParams& m = trend_model->params;
              const double level = s(k);
              const double drift = m.mu - m.kappa * (level - m.mu * t(k));
              return clamp_cap(x.scale * level * (drift - r * level) / (m.sigma * m.sigma), x.leverage_cap);
            },
            [&](const policy::RollingDriftKelly& x) -> double {
              const Eigen::Index count = std::min<Eigen::Index>(k, x.window);
              if (count < 2) return 0.0;
              const double dt = (t(k) - t(k - count)) / static_cast<double>(count);
              Vector log_ret(count);
              for (Eigen::Index j = 0; j < count; ++j) log_ret(j) = std::log(s(k - count + j + 1) / s(k - count + j));
              const double m = log_ret.mean();
              const double var = (log_ret.array() - m).square().sum() / static_cast<double>(count - 1);
              if (!(var > 0.0)) return 0.0;
              const double drift = m / dt + 0.5 * var / dt;
              return clamp_cap((drift - r) / (var / dt), x.leverage_cap);
            },
            [](const auto&) -> double { throw std::logic_error("unreachable"); },
        },
        p);
  };

  BacktestResult out;
  Vector wealth(n_steps + 1);
  out.fractions = Vector::Zero(n_steps);
  wealth(0) = 1.0;
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    if (out.bankrupt) {
      wealth(k + 1) = kBankruptcyFloor;
      continue;
    }
    const double f = fraction_at(k);
    if (!std::isfinite(f)) throw std::runtime_error("backtest_continuous: non-finite fraction from " + policy_name(p));
    out.fractions(k) = f;
    const double dt = t(k + 1) - t(k);
    const double growth = 1.0 + f * (s(k + 1) / s(k) - 1.0) + (1.0 - f) * r * dt;
    const double next = wealth(k) * growth;
    if (!(next > kBankruptcyFloor)) {
      out.bankrupt = true;
      out.bankrupt_time = t(k + 1);
      wealth(k + 1) = kBankruptcyFloor;
    } else {
      wealth(k + 1) = next;
    }
  }
  out.wealth = Path(t, std::move(wealth));
  return out;
}

double ArenaReport::t_statistic(std::size_t a, std::size_t b) const {
  const double se = diff_std_error(a, b);
  const double diff = mean_growth_diff(a, b);
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

namespace {

constexpr int kChartSamples = 50;

std::vector<Eigen::Index> sample_indices(Eigen::Index n_points) {
  const Eigen::Index last = n_points - 1;
  const Eigen::Index count = std::min<Eigen::Index>(kChartSamples, last);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j <= count; ++j) idx.push_back(j * last / count);
  return idx;
}

struct SeedOutcome {
  std::vector<PathMetrics> metrics;
  std::vector<char> bankrupt;
  Eigen::MatrixXd log_wealth;  // policy x sample
};

}  // namespace

ArenaReport arena(std::span<const Policy> policies, const MarketSpec& market, int n_seeds, const Seed& seed,
                  unsigned threads) {
  if (policies.empty()) throw std::invalid_argument("arena: empty policy list");
  if (n_seeds < 1) throw std::invalid_argument("arena: n_seeds must be >= 1");
  const std::size_t n_pol = policies.size();
  const bool discrete = std::holds_alternative<DiscreteMarket>(market);
  for (const Policy& p : policies) {
    if (discrete ? !is_discrete_policy(p) : !is_continuous_policy(p))
      throw std::invalid_argument("arena: policy '" + policy_name(p) + "' does not fit this market");
  }

  Eigen::Index n_points = 0;
  if (const auto* d = std::get_if<DiscreteMarket>(&market)) {
    validate(d->game);
    if (d->rounds < 1) throw std::invalid_argument("arena: rounds must be >= 1");
    n_points = d->rounds + 1;
  } else {
    const auto& c = std::get<ContinuousMarket>(market);
    validate(c.grid);
    n_points = c.grid.n_steps + 1;
  }
  const std::vector<Eigen::Index> samples = sample_indices(n_points);

  std::vector<SeedOutcome> outcomes(static_cast<std::size_t>(n_seeds));
  Vector times;
  std::mutex times_mutex;

  parallel_for(outcomes.size(), threads, [&](std::size_t i) {
    const Seed seed_i = substream(seed, i);
    SeedOutcome& out = outcomes[i];
    out.metrics.resize(n_pol);
    out.bankrupt.assign(n_pol, 0);
    out.log_wealth.resize(static_cast<Eigen::Index>(n_pol), static_cast<Eigen::Index>(samples.size()));
    auto record = [&](std::size_t j, const Path& wealth, bool in_logs) {
      out.metrics[j] = in_logs ? path_metrics_from_log(wealth) : path_metrics(wealth);
      for (std::size_t m = 0; m < samples.size(); ++m) {
        const double v = wealth.values()(samples[m]);
        out.log_wealth(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) = in_logs ? v : std::log(v);
      }
      if (i == 0 && j == 0) {
        std::lock_guard lock(times_mutex);
        times.resize(static_cast<Eigen::Index>(samples.size()));
        for (std::size_t m = 0; m < samples.size(); ++m) times(static_cast<Eigen::Index>(m)) = wealth.times()(samples[m]);
      }
    };
    if (const auto* d = std::get_if<DiscreteMarket>(&market)) {
      for (std::size_t j = 0; j < n_pol; ++j) record(j, backtest_discrete(policies[j], d->game, d->rounds, seed_i), true);
      return;
    }
    const auto& c = std::get<ContinuousMarket>(market);
    std::optional<DriftPaths> drift;
    Path price;
    if (const auto* m = std::get_if<StochasticDriftParams>(&c.model)) {
      drift = simulate_stochastic_drift(*m, c.grid, seed_i);
      price = drift->price;
    } else if (const auto* m = std::get_if<TrendOUMarket>(&c.model)) {
      price = simulate_trend_ou(m->params, c.grid, seed_i);
    } else {
      price = simulate_gbm(std::get<GbmMarket>(c.model).params, c.grid, seed_i);
    }
    for (std::size_t j = 0; j < n_pol; ++j) {
      const BacktestResult bt = backtest_continuous(policies[j], price, drift ? &drift->lambda : nullptr, c.model);
      out.bankrupt[j] = bt.bankrupt ? 1 : 0;
      record(j, bt.wealth, false);
    }
  });

  ArenaReport report;
  report.n_seeds = outcomes.size();
  report.sample_times = times;
  const auto np = static_cast<Eigen::Index>(n_pol);
  report.win_rate = Eigen::MatrixXd::Zero(np, np);
  report.mean_growth_diff = Eigen::MatrixXd::Zero(np, np);
  report.diff_std_error = Eigen::MatrixXd::Zero(np, np);
  report.mean_log_wealth = Eigen::MatrixXd::Zero(np, static_cast<Eigen::Index>(samples.size()));
  report.bankruptcies.assign(n_pol, 0);

  for (std::size_t j = 0; j < n_pol; ++j) {
    report.names.push_back(policy_name(policies[j]));
    std::vector<PathMetrics> per_seed;
    per_seed.reserve(outcomes.size());
    for (const SeedOutcome& o : outcomes) {
      per_seed.push_back(o.metrics[j]);
      report.bankruptcies[j] += static_cast<std::size_t>(o.bankrupt[j]);
    }
    report.stats.push_back(summarize(per_seed));
  }
  for (const SeedOutcome& o : outcomes) report.mean_log_wealth += o.log_wealth;
  report.mean_log_wealth /= static_cast<double>(outcomes.size());

  std::vector<double> diffs(outcomes.size());
  for (std::size_t a = 0; a < n_pol; ++a) {
    for (std::size_t b = 0; b < n_pol; ++b) {
      double wins = 0.0;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const PathMetrics& ma = outcomes[i].metrics[a];
        const PathMetrics& mb = outcomes[i].metrics[b];
        const double la = ma.log_terminal_wealth;
        const double lb = mb.log_terminal_wealth;
        wins += la > lb ? 1.0 : (la == lb ? 0.5 : 0.0);
        diffs[i] = ma.log_growth_rate - mb.log_growth_rate;
      }
      const MeanError d = mean_and_error(diffs);
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      report.win_rate(ia, ib) = wins / static_cast<double>(outcomes.size());
      report.mean_growth_diff(ia, ib) = d.mean;
      report.diff_std_error(ia, ib) = d.std_error;
    }
  }

  report.ranking.resize(n_pol);
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
    if (report.stats[a].mean_log_growth != report.stats[b].mean_log_growth)
      return report.stats[a].mean_log_growth > report.stats[b].mean_log_growth;
    return report.names[a] < report.names[b];
  });
  return report;
}

}  // namespace myopia
