#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "myopia/core.hpp"

namespace myopia {

/// Single-prize lottery with a fixed jackpot shared equally among every
/// ticket holding the drawn number. The modelled player holds one ticket;
/// n_other_players each pick one number from `popularity`.
struct LotterySpec {
  std::vector<double> popularity;
  std::vector<double> draw_distribution;  // empty means uniform 1/K
  std::int64_t n_other_players = 0;
  double jackpot = 1.0;
  double ticket_price = 1.0;

  std::size_t n_numbers() const { return popularity.size(); }
  double draw_probability(std::size_t number) const;
};

void validate(const LotterySpec& spec);

/// Exact expected payout of one ticket on `number`:
/// draw[number] * J * E[1 / (m + 1)], m ~ Binomial(M, popularity[number]).
double expected_ticket_value(const LotterySpec& spec, std::size_t number);

/// Number with the highest expected ticket value; ties go to the lowest index.
std::pair<std::size_t, double> best_number(const LotterySpec& spec);

/// Expected jackpot paid out per draw from the house's view, counting only
/// the crowd: a drawn number nobody holds rolls over. Never exceeds J.
double expected_house_payout(const LotterySpec& spec);

struct LotteryRun {
  double mean_net_payoff = 0.0;  // payout - ticket_price, per draw
  double std_error = 0.0;
  std::int64_t draws = 0;
  std::int64_t wins = 0;
};

/// Monte Carlo over `draws` independent drawings. The crowd re-picks every
/// draw. Draws are processed in fixed blocks, each with its own substream,
/// so the result does not depend on `threads`.
LotteryRun simulate_lottery(const LotterySpec& spec, std::size_t strategy, std::int64_t draws, const Seed& seed,
                            unsigned threads = 1);

}  // namespace myopia
