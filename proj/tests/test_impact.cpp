#include <doctest.h>

#include <cmath>

#include "myopia/impact.hpp"

using namespace myopia;

TEST_CASE("order impact") {
  const ImpactParams p{1.0, 0.5, 0.0, 1.0};
  CHECK(order_impact(Order{Side::buy, 4.0, 0.0}, p) == doctest::Approx(2.0));
  CHECK(order_impact(Order{Side::sell, 4.0, 0.0}, p) == doctest::Approx(-2.0));
  CHECK(order_impact(Order{Side::buy, 8.0, 0.0}, ImpactParams{2.0, 1.0, 0.0, 1.0}) == doctest::Approx(4.0));
  CHECK_THROWS(validate(ImpactParams{0.0, 0.5, 0.0, 1.0}));
  CHECK_THROWS(validate(ImpactParams{1.0, 0.0, 0.0, 1.0}));
  CHECK_THROWS(validate(ImpactParams{1.0, 0.5, -1.0, 1.0}));
  CHECK_THROWS(validate(ImpactParams{1.0, 0.5, 0.0, 1.5}));
}

TEST_CASE("tiny orders barely move the market") {
  const MarketState s = apply_order(MarketState{}, Order{Side::buy, 1e-14, 0.0}, ImpactParams{1.0, 0.5, 1.0, 0.5});
  CHECK(std::abs(s.mid() - 100.0) < 1e-6);
  CHECK(std::abs(s.cash) < 1e-11);
}

TEST_CASE("linear permanent impact returns the price after a round trip") {
  const ImpactParams p{2.0, 1.0, 0.0, 1.0};
  const MarketState s = run_sequence(MarketState{}, {{Side::buy, 3.0, 0.0}, {Side::sell, 3.0, 1.0}}, 0.0, p);
  CHECK(s.mid() == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(s.inventory == 0.0);
}

TEST_CASE("square-root impact: buy 4 then sell 4") {
  const ImpactParams p{1.0, 0.5, 0.0, 1.0};
  const MarketState after_buy = apply_order(MarketState{}, Order{Side::buy, 4.0, 0.0}, p);
  CHECK(after_buy.mid() == doctest::Approx(102.0));
  CHECK(after_buy.cash == doctest::Approx(-404.0));
  const MarketState done = apply_order(after_buy, Order{Side::sell, 4.0, 1.0}, p);
  CHECK(done.mid() == doctest::Approx(100.0));
  // Both fills sit at the midpoint of the price move, so this round trip is
  // free; the cost only appears once transient impact decays in between.
  CHECK(std::abs(done.cash) < 1e-12);
}

TEST_CASE("a decaying round trip costs the decayed transient impact") {
  const ImpactParams p{1.0, 0.5, 1.0, 0.5};
  const MarketState s = run_sequence(MarketState{}, {{Side::buy, 10.0, 0.0}, {Side::sell, 10.0, 0.5}}, 0.0, p);
  CHECK(s.cash == doctest::Approx(-6.2212965237596470).epsilon(1e-12));
  CHECK(s.inventory == 0.0);
}

TEST_CASE("concave permanent impact can be gamed by splitting orders") {
  // buy 1, buy 1, sell 2 at once: the split buys move the price by 2 but the
  // single sell only gives back sqrt(2), so the trader ends with 2 - sqrt(2).
  const ImpactParams p{1.0, 0.5, 0.0, 1.0};
  const MarketState s =
      run_sequence(MarketState{}, {{Side::buy, 1.0, 0.0}, {Side::buy, 1.0, 0.0}, {Side::sell, 2.0, 0.0}}, 0.0, p);
  CHECK(s.cash == doctest::Approx(0.5857864376269049512).epsilon(1e-12));
}

TEST_CASE("commutator") {
  const std::vector<Order> buy{{Side::buy, 10.0, 0.0}};
  const std::vector<Order> sell{{Side::sell, 10.0, 0.0}};
  SUBCASE("linear impact commutes") {
    const CommutatorResult c = commutator(buy, sell, ImpactParams{1.0, 1.0, 0.0, 1.0}, MarketState{}, 0.5);
    CHECK(std::abs(c.price_gap) < 1e-12);
  }
  SUBCASE("decay breaks the symmetry") {
    const CommutatorResult c = commutator(buy, sell, ImpactParams{1.0, 0.5, 1.0, 0.5}, MarketState{}, 0.5);
    CHECK(c.price_gap == doctest::Approx(-1.2442593047519294).epsilon(1e-12));
    CHECK(std::abs(c.cash_gap) < 1e-12);
  }
  SUBCASE("identical sequences") {
    const std::vector<Order> a{{Side::buy, 3.0, 0.0}, {Side::sell, 1.0, 0.2}};
    const CommutatorResult c = commutator(a, a, ImpactParams{1.0, 0.5, 2.0, 0.3}, MarketState{}, 0.1);
    CHECK(c.price_gap == 0.0);
    CHECK(c.cash_gap == 0.0);
  }
}

TEST_CASE("two-venue cycle") {
  const ImpactParams venue{1.0, 0.5, 2.0, 0.3};
  SUBCASE("identical venues never pay") {
    const CycleReport r = two_venue_cycle(venue, venue, 2.0, 10, 1.0);
    REQUIRE(r.net_cash.size() == 10);
    for (double x : r.net_cash) CHECK(x <= 1e-12);
    CHECK_FALSE(r.runs);
    CHECK(std::abs(r.final_inventory) < 1e-12);
  }
  SUBCASE("vanishing size, vanishing cash") {
    const ImpactParams hot{1.0, 0.5, 2.0, 0.8};
    const ImpactParams cold{100.0, 0.5, 2.0, 0.2};
    const CycleReport big = two_venue_cycle(hot, cold, 1.0, 5, 1.0);
    const CycleReport small = two_venue_cycle(hot, cold, 1e-10, 5, 1.0);
    CHECK(std::abs(small.mean_net_cash) < 1e-8);
    CHECK(std::abs(small.mean_net_cash) < std::abs(big.mean_net_cash));
  }
}
