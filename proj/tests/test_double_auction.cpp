#include <gtest/gtest.h>

#include "mpm/double_auction.hpp"
#include "mpm/random.hpp"

namespace {

using namespace mpm;

MarketInstance priced_market(const std::vector<double>& bids, const std::vector<double>& offers) {
  MarketInstance inst;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    Requirement q;
    q.id = "R" + std::to_string(i);
    q.s = 2;
    q.bp = bids[i];
    inst.requirements.push_back(q);
  }
  for (std::size_t j = 0; j < offers.size(); ++j) {
    ServiceOffer v;
    v.id = "S" + std::to_string(j);
    v.C = 1;
    v.op = offers[j];
    inst.services.push_back(v);
  }
  return inst;
}

TEST(DoubleAuction, NoCrossingNoMatches) {
  const auto res = run_da(priced_market({1, 2, 3}, {4, 5}));
  EXPECT_TRUE(res.matches.empty());
  EXPECT_EQ(res.x.nonzeros(), 0u);
}

TEST(DoubleAuction, SingleCrossingPair) {
  auto inst = priced_market({5}, {3});
  inst.requirements[0].s = 4;
  inst.services[0].C = 10;
  const auto res = run_da(inst);
  ASSERT_EQ(res.matches.size(), 1u);
  EXPECT_EQ(res.matches[0].price, 5.0);
  EXPECT_EQ(res.matches[0].x, 1.0);
  EXPECT_EQ(res.x(0, 0), 1.0);
}

TEST(DoubleAuction, ProportionLimitedByCache) {
  const auto res = run_da(priced_market({5}, {3}));  // s = 2, C = 1
  ASSERT_EQ(res.matches.size(), 1u);
  EXPECT_DOUBLE_EQ(res.matches[0].x, 0.5);
}

TEST(DoubleAuction, TracedTwoByTwo) {
  // Bids ascending (2, 8), offers descending (7, 1): offer 7 >= bid 2 is
  // skipped, offer 1 < bid 2 matches at price 2, then offers run out.
  const auto res = run_da(priced_market({2, 8}, {7, 1}));
  ASSERT_EQ(res.matches.size(), 1u);
  EXPECT_EQ(res.matches[0].requirement_id, "R0");
  EXPECT_EQ(res.matches[0].service_id, "S1");
  EXPECT_EQ(res.matches[0].price, 2.0);
}

TEST(DoubleAuction, EqualPricesDoNotCross) {
  EXPECT_TRUE(run_da(priced_market({3}, {3})).matches.empty());
}

TEST(DoubleAuction, TiesBrokenBySubmissionOrder) {
  const auto res = run_da(priced_market({4, 4}, {1, 1}));
  ASSERT_EQ(res.matches.size(), 2u);
  EXPECT_EQ(res.matches[0].requirement_id, "R0");
  EXPECT_EQ(res.matches[0].service_id, "S0");
  EXPECT_EQ(res.matches[1].requirement_id, "R1");
  EXPECT_EQ(res.matches[1].service_id, "S1");
}

TEST(DoubleAuction, StructuralInvariantsOnRandomMarkets) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = generate_instance(MarketConfig{}, 20, 20, seed);
    const auto res = run_da(inst);
    for (const auto& mt : res.matches) {
      EXPECT_LT(inst.services[mt.col].op, inst.requirements[mt.row].bp);
      EXPECT_EQ(mt.price, inst.requirements[mt.row].bp);
      EXPECT_LE(mt.x * inst.requirements[mt.row].s, inst.services[mt.col].C * (1 + 1e-12));
    }
    for (std::size_t i = 0; i < inst.m(); ++i) {
      std::size_t k = 0;
      for (std::size_t j = 0; j < inst.n(); ++j) k += res.x(i, j) > 0;
      EXPECT_LE(k, 1u);
    }
    for (std::size_t j = 0; j < inst.n(); ++j) {
      std::size_t k = 0;
      for (std::size_t i = 0; i < inst.m(); ++i) k += res.x(i, j) > 0;
      EXPECT_LE(k, 1u);
    }
  }
}

TEST(DoubleAuction, IgnoresDelayEnergyAndReputation) {
  Sampler rng(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_instance(MarketConfig{}, 15, 15, seed);
    auto perturbed = inst;
    for (auto& q : perturbed.requirements) {
      q.Q = rng.uniform(1, 100);
      q.tau = rng.uniform(1, 50);
      q.rep_r = rng.unit();
    }
    for (auto& v : perturbed.services) {
      v.f = rng.uniform(1, 20);
      v.r = rng.uniform(0.1, 3);
      v.eps = rng.uniform(1, 300);
      v.e_com = rng.unit();
      v.e_exe = rng.unit();
      v.rep_c = rng.unit();
    }
    EXPECT_EQ(run_da(inst).x.values(), run_da(perturbed).x.values());
  }
}

}  // namespace
