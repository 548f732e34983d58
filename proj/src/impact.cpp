#include "myopia/impact.hpp"

#include <cmath>
#include <stdexcept>

namespace myopia {

void validate(const ImpactParams& p) {
  if (!(p.depth > 0.0)) throw std::invalid_argument("ImpactParams: depth must be positive");
  if (!(p.exponent > 0.0 && p.exponent <= 1.0)) throw std::invalid_argument("ImpactParams: exponent must lie in (0, 1]");
  if (!(p.decay >= 0.0)) throw std::invalid_argument("ImpactParams: decay must be >= 0");
  if (!(p.permanent_share >= 0.0 && p.permanent_share <= 1.0))
    throw std::invalid_argument("ImpactParams: permanent_share must lie in [0, 1]");
}

namespace {

double decay_factor(double rate, double elapsed) { return rate == 0.0 ? 1.0 : std::exp(-rate * elapsed); }

void check_order(const Order& order) {
  if (!(order.size > 0.0)) throw std::invalid_argument("Order: size must be positive");
  if (!(order.time >= 0.0)) throw std::invalid_argument("Order: time must be >= 0");
}

// Fills `order` against a pool whose pre-trade mid is `mid`; returns the impact.
double fill(double mid, const Order& order, const ImpactParams& params, double& cash, double& inventory) {
  const double impact = order_impact(order, params);
  const double price = mid + 0.5 * impact;
  if (order.side == Side::buy) {
    cash -= order.size * price;
    inventory += order.size;
  } else {
    cash += order.size * price;
    inventory -= order.size;
  }
  return impact;
}

}  // namespace

double order_impact(const Order& order, const ImpactParams& params) {
  const double magnitude = std::pow(order.size / params.depth, params.exponent);
  return order.side == Side::buy ? magnitude : -magnitude;
}

MarketState advance_to(const MarketState& state, double time, const ImpactParams& params) {
  if (time < state.clock) throw std::invalid_argument("advance_to: time runs backwards");
  MarketState next = state;
  next.transient *= decay_factor(params.decay, time - state.clock);
  next.clock = time;
  return next;
}

MarketState apply_order(const MarketState& state, const Order& order, const ImpactParams& params) {
  validate(params);
  check_order(order);
  MarketState next = advance_to(state, order.time, params);
  const double impact = fill(next.mid(), order, params, next.cash, next.inventory);
  next.permanent += params.permanent_share * impact;
  next.transient += (1.0 - params.permanent_share) * impact;
  return next;
}

MarketState run_sequence(const MarketState& state, const std::vector<Order>& orders, double start,
                         const ImpactParams& params) {
  MarketState s = state;
  double last = -1.0;
  for (Order o : orders) {
    if (o.time < last) throw std::invalid_argument("run_sequence: order times must be non-decreasing");
    last = o.time;
    o.time += start;
    s = apply_order(s, o, params);
  }
  return s;
}

CommutatorResult commutator(const std::vector<Order>& seq_a, const std::vector<Order>& seq_b,
                            const ImpactParams& params, const MarketState& initial, double separation) {
  if (!(separation >= 0.0)) throw std::invalid_argument("commutator: separation must be >= 0");
  auto duration = [](const std::vector<Order>& seq) { return seq.empty() ? 0.0 : seq.back().time; };
  auto both = [&](const std::vector<Order>& first, const std::vector<Order>& second) {
    const MarketState mid = run_sequence(initial, first, initial.clock, params);
    return run_sequence(mid, second, initial.clock + duration(first) + separation, params);
  };
  CommutatorResult r;
  r.a_then_b = both(seq_a, seq_b);
  r.b_then_a = both(seq_b, seq_a);
  r.price_gap = r.a_then_b.mid() - r.b_then_a.mid();
  r.cash_gap = r.a_then_b.cash - r.b_then_a.cash;
  return r;
}

CycleReport two_venue_cycle(const ImpactParams& hot, const ImpactParams& cold, double size, int rounds,
                            double relax_time, double base_price) {
  validate(hot);
  validate(cold);
  if (!(size > 0.0)) throw std::invalid_argument("two_venue_cycle: size must be positive");
  if (rounds < 1) throw std::invalid_argument("two_venue_cycle: rounds must be >= 1");
  if (!(relax_time >= 0.0)) throw std::invalid_argument("two_venue_cycle: relax_time must be >= 0");

  double permanent = 0.0;
  double transient_hot = 0.0;
  double transient_cold = 0.0;
  double cash = 0.0;
  double inventory = 0.0;

  auto trade = [&](Side side, bool on_hot) {
    const ImpactParams& p = on_hot ? hot : cold;
    double& transient = on_hot ? transient_hot : transient_cold;
    const double impact = fill(base_price + permanent + transient, Order{side, size, 0.0}, p, cash, inventory);
    permanent += p.permanent_share * impact;
    transient += (1.0 - p.permanent_share) * impact;
  };
  auto relax = [&] {
    transient_hot *= decay_factor(hot.decay, relax_time);
    transient_cold *= decay_factor(cold.decay, relax_time);
  };

  CycleReport rep;
  for (int k = 0; k < rounds; ++k) {
    const double cash_before = cash;
    trade(Side::buy, false);
    trade(Side::sell, true);
    relax();
    trade(Side::buy, true);
    trade(Side::sell, false);
    relax();
    rep.net_cash.push_back(cash - cash_before);
  }
  double total = 0.0;
  for (double c : rep.net_cash) total += c;
  rep.mean_net_cash = total / rounds;
  rep.runs = rep.mean_net_cash > 0.0;
  rep.final_inventory = inventory;
  return rep;
}

}  // namespace myopia
