#pragma once

#include <vector>

#include "myopia/core.hpp"

namespace myopia {

/// Power-law impact I = sign * (size / depth)^exponent, split into a
/// permanent part (permanent_share * I) and a transient part that decays
/// at rate `decay` per year.
struct ImpactParams {
  double depth = 1.0;
  double exponent = 0.5;
  double decay = 0.0;
  double permanent_share = 1.0;
};

void validate(const ImpactParams& params);

enum class Side { buy, sell };

struct Order {
  Side side = Side::buy;
  double size = 1.0;
  double time = 0.0;
};

/// Single-venue state. mid() = base_price + permanent + transient.
struct MarketState {
  double base_price = 100.0;
  double permanent = 0.0;
  double transient = 0.0;
  double cash = 0.0;
  double inventory = 0.0;
  double clock = 0.0;

  double mid() const { return base_price + permanent + transient; }
};

/// Signed impact of one order.
double order_impact(const Order& order, const ImpactParams& params);

/// Decays the transient component to order.time, fills at the pre-trade
/// mid plus half the order's own impact, then applies the impact.
MarketState apply_order(const MarketState& state, const Order& order, const ImpactParams& params);

/// Lets the transient component decay until `time` with no trading.
MarketState advance_to(const MarketState& state, double time, const ImpactParams& params);

/// Runs orders whose times are offsets from `start`.
MarketState run_sequence(const MarketState& state, const std::vector<Order>& orders, double start,
                         const ImpactParams& params);

struct CommutatorResult {
  double price_gap = 0.0;  // mid(A then B) - mid(B then A)
  double cash_gap = 0.0;
  MarketState a_then_b;
  MarketState b_then_a;
};

/// Runs A then B and B then A from the same state. Order times are offsets
/// within their own sequence; the second sequence starts `separation`
/// after the first sequence's last order.
CommutatorResult commutator(const std::vector<Order>& seq_a, const std::vector<Order>& seq_b,
                            const ImpactParams& params, const MarketState& initial, double separation = 0.0);

struct CycleReport {
  std::vector<double> net_cash;  // per round
  double mean_net_cash = 0.0;
  bool runs = false;             // mean_net_cash > 0
  double final_inventory = 0.0;
};

/// Two pools trading one asset: the permanent component is shared, each
/// venue keeps its own transient. Each round buys `size` on the cold
/// (deep) venue and sells it on the hot one, waits `relax_time`, then buys
/// on the hot venue and sells on the cold one, and waits again.
CycleReport two_venue_cycle(const ImpactParams& hot, const ImpactParams& cold, double size, int rounds,
                            double relax_time = 1.0, double base_price = 100.0);

}  // namespace myopia
