#include "myopia/lottery.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace myopia {

namespace {

constexpr std::int64_t kBinomialSumLimit = 10'000;
constexpr double kSeriesThreshold = 1e-12;
constexpr std::int64_t kDrawBlock = 1 << 16;
constexpr std::int64_t kDirectCountLimit = 256;

void check_distribution(const std::vector<double>& v, const char* name, std::size_t expected_size) {
  if (v.size() != expected_size)
    throw std::invalid_argument(std::string("LotterySpec: ") + name + " must have one entry per number");
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string("LotterySpec: ") + name + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(std::string("LotterySpec: ") + name + " must sum to 1");
}

// E[1 / (m + 1)] for m ~ Binomial(M, w).
double expected_share(std::int64_t M, double w) {
  if (M == 0 || w == 0.0) return 1.0;
  const double mw = static_cast<double>(M) * w;
  if (w < kSeriesThreshold && mw < 1e-6) return 1.0 - mw / 2.0;
  if (M > kBinomialSumLimit || w < kSeriesThreshold) {
    // (1 - (1 - w)^(M+1)) / ((M + 1) w)
    const double m1 = static_cast<double>(M) + 1.0;
    return -std::expm1(m1 * std::log1p(-w)) / (m1 * w);
  }
  if (w == 1.0) return 1.0 / (static_cast<double>(M) + 1.0);
  const double log_w = std::log(w);
  const double log_q = std::log1p(-w);
  const double log_m_fact = std::lgamma(static_cast<double>(M) + 1.0);
  double sum = 0.0;
  for (std::int64_t m = 0; m <= M; ++m) {
    const double md = static_cast<double>(m);
    const double log_weight = log_m_fact - std::lgamma(md + 1.0) - std::lgamma(static_cast<double>(M - m) + 1.0) +
                              md * log_w + static_cast<double>(M - m) * log_q;
    sum += std::exp(log_weight) / (md + 1.0);
  }
  return sum;
}

std::size_t sample_index(Rng& rng, const std::vector<double>& cumulative) {
  const double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < cumulative.size(); ++i)
    if (u < cumulative[i]) return i;
  return cumulative.size() - 1;
}

std::int64_t sample_binomial(Rng& rng, std::int64_t M, double w) {
  if (M <= kDirectCountLimit) {
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < M; ++i) count += rng.bernoulli(w) ? 1 : 0;
    return count;
  }
  // libstdc++'s algorithm is fixed, so this stays reproducible on one toolchain.
  std::binomial_distribution<std::int64_t> dist(M, w);
  return dist(rng.engine());
}

}  // namespace

double LotterySpec::draw_probability(std::size_t number) const {
  if (draw_distribution.empty()) return 1.0 / static_cast<double>(popularity.size());
  return draw_distribution[number];
}

void validate(const LotterySpec& spec) {
  if (spec.popularity.empty()) throw std::invalid_argument("LotterySpec: need at least one number");
  check_distribution(spec.popularity, "popularity", spec.popularity.size());
  if (!spec.draw_distribution.empty()) check_distribution(spec.draw_distribution, "draw_distribution", spec.popularity.size());
  if (spec.n_other_players < 0) throw std::invalid_argument("LotterySpec: n_other_players must be >= 0");
  if (!(spec.jackpot > 0.0)) throw std::invalid_argument("LotterySpec: jackpot must be positive");
  if (!(spec.ticket_price >= 0.0)) throw std::invalid_argument("LotterySpec: ticket_price must be >= 0");
}

double expected_ticket_value(const LotterySpec& spec, std::size_t number) {
  validate(spec);
  if (number >= spec.n_numbers())
    throw std::out_of_range("expected_ticket_value: number " + std::to_string(number) + " out of range");
  return spec.draw_probability(number) * spec.jackpot * expected_share(spec.n_other_players, spec.popularity[number]);
}

std::pair<std::size_t, double> best_number(const LotterySpec& spec) {
  validate(spec);
  std::pair<std::size_t, double> best{0, expected_ticket_value(spec, 0)};
  for (std::size_t i = 1; i < spec.n_numbers(); ++i) {
    const double ev = expected_ticket_value(spec, i);
    if (ev > best.second) best = {i, ev};
  }
  return best;
}

double expected_house_payout(const LotterySpec& spec) {
  validate(spec);
  double total = 0.0;
  for (std::size_t i = 0; i < spec.n_numbers(); ++i) {
    const double nobody = std::exp(static_cast<double>(spec.n_other_players) * std::log1p(-spec.popularity[i]));
    total += spec.draw_probability(i) * spec.jackpot * (1.0 - nobody);
  }
  return total;
}

LotteryRun simulate_lottery(const LotterySpec& spec, std::size_t strategy, std::int64_t draws, const Seed& seed,
                            unsigned threads) {
  validate(spec);
  if (strategy >= spec.n_numbers()) throw std::out_of_range("simulate_lottery: strategy number out of range");
  if (draws < 1) throw std::invalid_argument("simulate_lottery: draws must be >= 1");

  std::vector<double> cumulative(spec.n_numbers());
  for (std::size_t i = 0; i < spec.n_numbers(); ++i)
    cumulative[i] = (i ? cumulative[i - 1] : 0.0) + spec.draw_probability(i);

  struct Block {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t wins = 0;
  };
  const std::int64_t n_blocks = (draws + kDrawBlock - 1) / kDrawBlock;
  std::vector<Block> blocks(static_cast<std::size_t>(n_blocks));
  const double w = spec.popularity[strategy];

  parallel_for(blocks.size(), threads, [&](std::size_t b) {
    Rng rng(substream(seed, b));
    const std::int64_t begin = static_cast<std::int64_t>(b) * kDrawBlock;
    const std::int64_t end = std::min(draws, begin + kDrawBlock);
    Block acc;
    for (std::int64_t d = begin; d < end; ++d) {
      double payout = 0.0;
      if (sample_index(rng, cumulative) == strategy) {
        const std::int64_t others = sample_binomial(rng, spec.n_other_players, w);
        payout = spec.jackpot / (static_cast<double>(others) + 1.0);
        ++acc.wins;
      }
      const double net = payout - spec.ticket_price;
      acc.sum += net;
      acc.sum_sq += net * net;
    }
    blocks[b] = acc;
  });

  LotteryRun run;
  run.draws = draws;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const Block& b : blocks) {
    sum += b.sum;
    sum_sq += b.sum_sq;
    run.wins += b.wins;
  }
  const double n = static_cast<double>(draws);
  run.mean_net_payoff = sum / n;
  if (draws > 1) {
    const double var = std::max(0.0, (sum_sq - n * run.mean_net_payoff * run.mean_net_payoff) / (n - 1.0));
    run.std_error = std::sqrt(var / n);
  }
  return run;
}

}  // namespace myopia
