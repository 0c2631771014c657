#include <gtest/gtest.h>

#include "mpm/market.hpp"
#include "mpm/serialization.hpp"

namespace {

using namespace mpm;

void expect_within(const Range& range, double v, const char* what) {
  EXPECT_TRUE(range.contains(v)) << what << "=" << v << " outside [" << range.lo << ", "
                                 << range.hi << "]";
}

void expect_in_ranges(const MarketInstance& inst) {
  for (const auto& q : inst.requirements) {
    const KindRanges& k = inst.config.ranges(q.kind);
    expect_within(k.s, q.s, "s");
    expect_within(k.Q, q.Q, "Q");
    expect_within(k.tau, q.tau, "tau");
    expect_within(k.bp, q.bp, "bp");
    expect_within(k.reputation, q.rep_r * kReputationScale, "rep_r");
  }
  for (const auto& v : inst.services) {
    const KindRanges& k = inst.config.ranges(v.kind);
    expect_within(k.C, v.C, "C");
    expect_within(k.f, v.f, "f");
    expect_within(k.r, v.r, "r");
    expect_within(k.eps, v.eps, "eps");
    expect_within(k.e_com, v.e_com, "e_com");
    expect_within(k.e_exe, v.e_exe, "e_exe");
    expect_within(k.op, v.op, "op");
    expect_within(k.reputation, v.rep_c * kReputationScale, "rep_c");
  }
}

TEST(GenerateInstance, SinglePairFieldsInsideTableRanges) {
  const auto inst = generate_instance(MarketConfig{}, 1, 1, 42);
  ASSERT_EQ(inst.m(), 1u);
  ASSERT_EQ(inst.n(), 1u);
  EXPECT_GE(inst.requirements[0].bp, 0.1);
  EXPECT_LE(inst.requirements[0].bp, 10.0);
  expect_in_ranges(inst);
}

TEST(GenerateInstance, EmptyMarket) {
  const auto inst = generate_instance(MarketConfig{}, 0, 0, 123);
  EXPECT_TRUE(inst.requirements.empty());
  EXPECT_TRUE(inst.services.empty());
  EXPECT_TRUE(inst.empty());
}

TEST(GenerateInstance, OneEdgePerThirtyOneParticipants) {
  const auto inst = generate_instance(MarketConfig{}, 31, 31, 7);
  auto edges = [](const auto& list) {
    return std::count_if(list.begin(), list.end(),
                         [](const auto& p) { return p.kind == ParticipantKind::Edge; });
  };
  EXPECT_EQ(edges(inst.requirements), 1);
  EXPECT_EQ(edges(inst.services), 1);
  EXPECT_EQ(inst.requirements.front().kind, ParticipantKind::Edge);
  EXPECT_EQ(inst.services.front().kind, ParticipantKind::Edge);
}

TEST(GenerateInstance, EdgeCountFollowsRatio) {
  EXPECT_EQ(edge_count(0, 1.0 / 30), 0u);
  EXPECT_EQ(edge_count(15, 1.0 / 30), 0u);
  EXPECT_EQ(edge_count(30, 1.0 / 30), 1u);
  EXPECT_EQ(edge_count(60, 1.0 / 30), 2u);
  EXPECT_EQ(edge_count(90, 1.0 / 30), 3u);
  EXPECT_EQ(edge_count(10, 0.0), 0u);
}

TEST(GenerateInstance, PureFunctionOfArguments) {
  const MarketConfig cfg;
  for (std::uint64_t seed : {0ull, 1ull, 99ull, 0xffffffffffffull}) {
    EXPECT_EQ(generate_instance(cfg, 17, 23, seed), generate_instance(cfg, 17, 23, seed));
  }
  EXPECT_NE(generate_instance(cfg, 5, 5, 1), generate_instance(cfg, 5, 5, 2));
}

TEST(GenerateInstance, EveryDrawInsideItsRangeAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = generate_instance(MarketConfig{}, 35, 35, seed);
    expect_in_ranges(inst);
    for (const auto& q : inst.requirements) {
      EXPECT_GE(q.rep_r, 0.4);
      EXPECT_LE(q.rep_r, 1.0);
    }
    for (const auto& v : inst.services) {
      EXPECT_GE(v.rep_c, 0.4);
      EXPECT_LE(v.rep_c, 1.0);
    }
  }
}

TEST(GenerateInstance, RejectsInvalidConfig) {
  MarketConfig cfg;
  cfg.terminal.tau = {15, 5};
  EXPECT_THROW(generate_instance(cfg, 1, 1, 1), ConfigError);

  cfg = MarketConfig{};
  cfg.p_min = 0;
  EXPECT_THROW(generate_instance(cfg, 1, 1, 1), ConfigError);

  cfg = MarketConfig{};
  cfg.weights.phi = {0.5, 0.5, 0.5};
  EXPECT_THROW(generate_instance(cfg, 1, 1, 1), ConfigError);

  cfg = MarketConfig{};
  cfg.prng = "lcg";
  EXPECT_THROW(generate_instance(cfg, 1, 1, 1), ConfigError);
}

TEST(FilterPrices, InBoundsIsIdentity) {
  const auto inst = generate_instance(MarketConfig{}, 12, 9, 3);
  EXPECT_EQ(filter_prices(inst), inst);
}

TEST(FilterPrices, RemovesOutOfBoundOfferOnly) {
  auto inst = generate_instance(MarketConfig{}, 4, 4, 5);
  inst.services[2].op = inst.config.p_max + 1;
  const auto out = filter_prices(inst);
  EXPECT_EQ(out.requirements, inst.requirements);
  ASSERT_EQ(out.n(), 3u);
  EXPECT_EQ(out.services[0], inst.services[0]);
  EXPECT_EQ(out.services[1], inst.services[1]);
  EXPECT_EQ(out.services[2], inst.services[3]);
}

TEST(FilterPrices, BoundsAreInclusiveAndOrderPreserved) {
  MarketInstance inst;
  inst.config.p_min = 1;
  inst.config.p_max = 5;
  for (double bp : {0.5, 1.0, 5.0, 5.5, 3.0}) {
    Requirement q;
    q.id = "R" + std::to_string(inst.requirements.size());
    q.bp = bp;
    inst.requirements.push_back(q);
  }
  const auto out = filter_prices(inst);
  ASSERT_EQ(out.m(), 3u);
  EXPECT_EQ(out.requirements[0].id, "R1");
  EXPECT_EQ(out.requirements[1].id, "R2");
  EXPECT_EQ(out.requirements[2].id, "R4");
}

TEST(FilterPrices, Idempotent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = generate_instance(MarketConfig{}, 10, 10, seed);
    inst.config.p_min = 2.5;
    inst.config.p_max = 7.5;
    const auto once = filter_prices(inst);
    EXPECT_EQ(filter_prices(once), once);
  }
}

TEST(Validation, RejectsBadSubmissions) {
  MarketInstance inst;
  Requirement q;
  q.id = "R0";
  q.s = 0;
  inst.requirements.push_back(q);
  EXPECT_THROW(validate(inst), ConfigError);

  inst.requirements[0].s = 1;
  inst.requirements.push_back(inst.requirements[0]);
  EXPECT_THROW(validate(inst), ConfigError);  // duplicate id

  inst.requirements.pop_back();
  ServiceOffer v;
  v.id = "S0";
  v.rep_c = 1.5;
  inst.services.push_back(v);
  EXPECT_THROW(validate(inst), ConfigError);
}

TEST(Serialization, InstanceJsonRoundTripsExactly) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto inst = generate_instance(MarketConfig{}, 8, 6, seed);
    const json j = inst;
    const auto back = json::parse(j.dump()).get<MarketInstance>();
    EXPECT_EQ(back, inst);
  }
}

TEST(Serialization, ConfigFieldsAreOptional) {
  const auto cfg = json::parse(R"({"p_max": 20, "ranges": {"edge": {"C": [6, 7]}}})")
                       .get<MarketConfig>();
  EXPECT_EQ(cfg.p_max, 20);
  EXPECT_EQ(cfg.p_min, 0.1);
  EXPECT_EQ(cfg.edge.C, (Range{6, 7}));
  EXPECT_EQ(cfg.edge.f, default_edge_ranges().f);
  EXPECT_EQ(cfg.terminal, default_terminal_ranges());
}

}  // namespace
