#include <gtest/gtest.h>

#include "cardpay/sim.hpp"
#include "cardpay/stress.hpp"
#include "support.hpp"

using namespace cardpay;
using namespace cardpay::testing;

namespace {

SimConfig small(std::uint64_t seed = 7) {
  SimConfig c;
  c.seed = seed;
  c.num_cards = 20;
  c.num_customers = 10;
  c.num_purchases = 400;
  return c;
}

std::string bytes(const SimReport& r) { return canonical::encode(r.to_value()); }

}  // namespace

TEST(Conservation, ResidualIsExactDifference) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    FinalState s;
    s.remaining = Money{rng.between(0, 1 << 30)};
    s.held = Money{rng.between(0, 1 << 30)};
    s.payouts = Money{rng.between(0, 1 << 30)};
    s.fees = Money{rng.between(0, 1 << 30)};
    s.undemanded = Money{rng.between(0, 1 << 30)};
    const std::int64_t sum = s.remaining.minor + s.held.minor + s.payouts.minor + s.fees.minor + s.undemanded.minor;
    const std::int64_t skew = rng.coin() ? 0 : rng.between(-5, 5);
    s.issued = Money{sum + skew};
    const auto r = check_conservation(s);
    ASSERT_EQ(r.residual, skew);
    ASSERT_EQ(r.ok, skew == 0);
  }
}

TEST(SimConfigValue, RoundTripAndValidation) {
  SimConfig c = small();
  c.crash_points = {3, 9};
  const SimConfig back = SimConfig::from_value(c.to_value());
  EXPECT_EQ(canonical::encode(back.to_value()), canonical::encode(c.to_value()));

  auto rejects = [](const std::string& text) {
    try {
      SimConfig::from_value(canonical::parse_relaxed(text)).validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::ConfigInvalid;
    }
    return false;
  };
  EXPECT_TRUE(rejects(R"({"seeds": 1})"));
  EXPECT_TRUE(rejects(R"({"drop_pct": 101})"));
  EXPECT_TRUE(rejects(R"({"drop_pct": 50, "duplicate_pct": 40, "reorder_pct": 20})"));
  EXPECT_TRUE(rejects(R"({"num_cards": 0})"));
  EXPECT_TRUE(rejects(R"({"periods": 0})"));
  EXPECT_TRUE(rejects(R"({"price_min": 10, "price_max": 5})"));
  EXPECT_TRUE(rejects(R"({"fee_rate_bp": 20000})"));
  try {
    canonical::parse_relaxed(R"({"drop_pct": 0.5})");
    ADD_FAILURE() << "float accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnencodableValue);
  }
  EXPECT_FALSE(rejects(R"({"num_purchases": 10})"));
}

TEST(Simulation, FaultyRunConservesValue) {
  const SimReport r = run_simulation(small());
  EXPECT_TRUE(r.invariants_hold()) << bytes(r);
  EXPECT_EQ(r.conservation.residual, 0);
  EXPECT_GT(r.purchases_ok, 0u);
  EXPECT_GT(r.network.at("dropped"), 0u);
  EXPECT_EQ(r.unsettled_periods, 0u);
  EXPECT_EQ(r.totals.held, Money{0});
  EXPECT_EQ(r.ledger_entries, r.replicas);
}

TEST(Simulation, ManySeedsManyFaultMixes) {
  Rng rng(99);
  for (int i = 0; i < 8; ++i) {
    SimConfig c = small(rng.engine()());
    c.num_purchases = 150;
    c.drop_pct = static_cast<int>(rng.below(30));
    c.duplicate_pct = static_cast<int>(rng.below(30));
    c.reorder_pct = static_cast<int>(rng.below(30));
    c.periods = 1 + rng.below(4);
    c.price_min = 50;
    c.price_max = 800;
    const SimReport r = run_simulation(c);
    EXPECT_TRUE(r.invariants_hold()) << canonical::encode(c.to_value()) << "\n" << bytes(r);
    EXPECT_EQ(r.conservation.residual, 0);
  }
}

TEST(Simulation, Deterministic) {
  EXPECT_EQ(bytes(run_simulation(small(5))), bytes(run_simulation(small(5))));
  EXPECT_NE(bytes(run_simulation(small(5))), bytes(run_simulation(small(6))));
}

TEST(Simulation, TotalLossCapturesNothing) {
  SimConfig c = small();
  c.drop_pct = 100;
  c.duplicate_pct = 0;
  c.reorder_pct = 0;
  const SimReport r = run_simulation(c);
  EXPECT_EQ(r.purchases_ok, 0u);
  EXPECT_EQ(r.replicas, 0u);
  EXPECT_EQ(r.totals.remaining, r.totals.issued);
  EXPECT_EQ(r.conservation.residual, 0);
}

TEST(Simulation, CrashesReplayToSameState) {
  SimConfig c = small();
  c.price_min = 50;
  c.price_max = 500;
  c.crash_points = {1, 2, 5, 10, 20};
  const SimReport r = run_simulation(c);
  EXPECT_EQ(r.crashes, 5u);
  EXPECT_EQ(r.crash_state_mismatches, 0u);
  EXPECT_TRUE(r.invariants_hold()) << bytes(r);
}

TEST(Stress, ConcurrentCheckoutsNeverOverspend) {
  StressConfig c;
  c.server_threads = 4;
  c.workers = 8;
  const StressReport r = run_stress(c);
  EXPECT_TRUE(r.ok()) << canonical::encode(r.to_value());
  EXPECT_EQ(r.captures, 10u);
  EXPECT_EQ(r.final_balance, 0);
  EXPECT_EQ(r.negative_balance_events, 0u);
}
