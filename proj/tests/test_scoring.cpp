#include <gtest/gtest.h>

#include <cmath>

#include "mpm/random.hpp"
#include "mpm/scoring.hpp"

namespace {

using namespace mpm;

Requirement make_req(double s, double Q, double tau, double bp, double rep) {
  Requirement q;
  q.id = "R";
  q.s = s;
  q.Q = Q;
  q.tau = tau;
  q.bp = bp;
  q.rep_r = rep;
  return q;
}

ServiceOffer make_svc(double r, double f, double eps, double e_com, double e_exe, double op,
                      double rep, double C = 10) {
  ServiceOffer v;
  v.id = "S";
  v.C = C;
  v.r = r;
  v.f = f;
  v.eps = eps;
  v.e_com = e_com;
  v.e_exe = e_exe;
  v.op = op;
  v.rep_c = rep;
  return v;
}

TEST(TaskDelay, ZeroAssignment) {
  EXPECT_EQ(task_delay(make_req(1, 10, 5, 1, 0.5), make_svc(0.5, 5, 1, 0, 0, 1, 0.5), 0.0), 0.0);
}

TEST(TaskDelay, HandEvaluatedCases) {
  // 0.5*1/0.5 + 0.5*10/5
  EXPECT_DOUBLE_EQ(task_delay(make_req(1, 10, 5, 1, 0.5), make_svc(0.5, 5, 1, 0, 0, 1, 0.5), 0.5),
                   2.0);
  // 2/1 + 6/3
  EXPECT_DOUBLE_EQ(task_delay(make_req(2, 6, 5, 1, 0.5), make_svc(1, 3, 1, 0, 0, 1, 0.5), 1.0),
                   4.0);
}

TEST(Energy, HandEvaluatedCase) {
  const auto req = make_req(1, 10, 5, 1, 0.5);
  const auto svc = make_svc(0.5, 5, 100, 0.2, 1.0, 1, 0.5);
  EXPECT_EQ(energy(req, svc, 0.0), 0.0);
  // 0.2*0.5*1/0.5 + 1.0*0.5*10/5
  EXPECT_DOUBLE_EQ(energy(req, svc, 0.5), 1.2);
  EXPECT_DOUBLE_EQ(energy(req, svc, 1.0), 2 * energy(req, svc, 0.5));
}

TEST(Linearity, DelayAndEnergyScaleWithProportion) {
  Sampler rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto req = make_req(rng.uniform(0.06, 10), rng.uniform(0.6, 90), 10, 1, 0.5);
    const auto svc = make_svc(rng.uniform(0.1, 2.5), rng.uniform(1, 15), 10, rng.uniform(0, 0.5),
                              rng.uniform(0, 1.25), 1, 0.5);
    const double x = rng.unit(), lambda = rng.unit();
    EXPECT_NEAR(task_delay(req, svc, lambda * x), lambda * task_delay(req, svc, x),
                1e-12 * (1 + task_delay(req, svc, x)));
    EXPECT_NEAR(energy(req, svc, lambda * x), lambda * energy(req, svc, x),
                1e-12 * (1 + energy(req, svc, x)));
  }
}

TEST(EvaluatePair, PriceComponentsVanishWhenOfferAboveBid) {
  const auto e = evaluate_pair(make_req(1, 1, 10, 2, 0.5), make_svc(1, 1, 10, 0, 0, 3, 0.5), 0.3,
                               PreferenceWeights{});
  EXPECT_EQ(e.sps2, 0.0);
  EXPECT_EQ(e.rps2, 0.0);
}

TEST(EvaluatePair, DelayComponentZeroAtToleranceBoundary) {
  // delay per unit = 1/1 + 3/1 = 4 s; tau = 2 s reached at x = 0.5.
  const auto e = evaluate_pair(make_req(1, 3, 2, 5, 0.5), make_svc(1, 1, 100, 0, 0, 1, 0.5), 0.5,
                               PreferenceWeights{});
  EXPECT_DOUBLE_EQ(e.t, 2.0);
  EXPECT_EQ(e.sps1, 0.0);
}

TEST(EvaluatePair, WeightedServiceScore) {
  // Components (0.8, 1.0, 0.6): t = 0.2 tau, op = bp, rep_c = 0.6.
  // delay per unit = 1 + 1 = 2 s, x = 0.5 gives t = 1 s, tau = 5 s.
  const auto e = evaluate_pair(make_req(1, 1, 5, 4, 0.5), make_svc(1, 1, 100, 0, 0, 4, 0.6), 0.5,
                               PreferenceWeights{});
  EXPECT_DOUBLE_EQ(e.sps1, 0.8);
  EXPECT_DOUBLE_EQ(e.sps2, 1.0);
  EXPECT_DOUBLE_EQ(e.sps3, 0.6);
  EXPECT_NEAR(e.sps, 0.784, 1e-15);
}

TEST(EvaluatePair, ZeroProportionScoresZero) {
  Sampler rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto e = evaluate_pair(
        make_req(rng.uniform(0.1, 10), rng.uniform(1, 90), rng.uniform(5, 30), rng.uniform(0.1, 10),
                 rng.unit()),
        make_svc(rng.uniform(0.1, 2), rng.uniform(1, 10), rng.uniform(5, 200), 0.2, 0.5,
                 rng.uniform(0.1, 10), rng.unit()),
        0.0, PreferenceWeights{});
    EXPECT_EQ(e.sps, 0.0);
    EXPECT_EQ(e.rps, 0.0);
  }
}

TEST(EvaluatePair, ComponentsBoundedForRandomInputs) {
  Sampler rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    PreferenceWeights w;
    const double a = rng.unit(), b = rng.unit() * (1 - a);
    w.phi = {a, b, 1 - a - b};
    w.psi = {b, 1 - a - b, a};
    const auto e = evaluate_pair(
        make_req(rng.uniform(0.06, 10), rng.uniform(0.6, 90), rng.uniform(5, 30),
                 rng.uniform(0.1, 10), rng.unit()),
        make_svc(rng.uniform(0.1, 2.5), rng.uniform(1, 15), rng.uniform(5, 250),
                 rng.uniform(0.1, 0.5), rng.uniform(0.3, 1.25), rng.uniform(0.1, 10), rng.unit()),
        rng.unit(), w);
    for (double c : {e.sps1, e.sps2, e.sps3, e.rps1, e.rps2, e.rps3, e.sps, e.rps}) {
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0 + 1e-15);
    }
    EXPECT_GE(e.t, 0.0);
    EXPECT_GE(e.E, 0.0);
  }
}

TEST(EvaluatePair, PriceScoresMonotone) {
  const PreferenceWeights w;
  const auto base_req = make_req(1, 1, 10, 6, 0.5);
  double prev_sps2 = -1;
  for (double op = 0.1; op <= 6.0; op += 0.1) {
    const auto e = evaluate_pair(base_req, make_svc(1, 1, 10, 0, 0, op, 0.5), 0.1, w);
    EXPECT_GE(e.sps2, prev_sps2);
    prev_sps2 = e.sps2;
  }
  double prev_rps2 = -1;
  for (double bp = 3.0; bp <= 10.0; bp += 0.1) {
    const auto e = evaluate_pair(make_req(1, 1, 10, bp, 0.5), make_svc(1, 1, 10, 0, 0, 3, 0.5), 0.1, w);
    EXPECT_GE(e.rps2, prev_rps2);
    prev_rps2 = e.rps2;
  }
}

TEST(Satisfaction, ZeroMatrix) {
  MarketInstance inst;
  inst.requirements = {make_req(1, 1, 10, 5, 0.5), make_req(2, 2, 10, 5, 0.5)};
  inst.requirements[1].id = "R1";
  inst.services = {make_svc(1, 1, 10, 0, 0, 1, 0.5)};
  const auto s = satisfaction(inst, MatchMatrix(2, 1));
  EXPECT_EQ(s.ars, 0.0);
  EXPECT_EQ(s.acs, 0.0);
  EXPECT_EQ(s.objective, 0.0);
}

TEST(Satisfaction, EmptyMarketIsZero) {
  MarketInstance inst;
  const auto s = satisfaction(inst, MatchMatrix(0, 0));
  EXPECT_EQ(s.objective, 0.0);
}

TEST(Satisfaction, PerfectSinglePair) {
  // Delay and energy negligible, op = bp, both reputations 1. The price
  // component of RPS is exp(-op/bp) < 1, so it carries no weight here.
  MarketInstance inst;
  inst.config.weights.psi = {0.5, 0.0, 0.5};
  inst.requirements = {make_req(1e-9, 1e-9, 1e6, 2, 1.0)};
  inst.services = {make_svc(1e9, 1e9, 1e6, 0.1, 0.1, 2, 1.0)};
  MatchMatrix X(1, 1);
  X(0, 0) = 1.0;
  const auto s = satisfaction(inst, X);
  EXPECT_DOUBLE_EQ(s.ars, 1.0);
  EXPECT_DOUBLE_EQ(s.acs, 1.0);
  EXPECT_DOUBLE_EQ(s.objective, 1.0);
}

TEST(Satisfaction, ShapeMismatchThrows) {
  MarketInstance inst;
  inst.requirements = {make_req(1, 1, 10, 5, 0.5)};
  EXPECT_THROW(satisfaction(inst, MatchMatrix(2, 2)), std::invalid_argument);
}

// Independent spreadsheet-style re-evaluation of the score equations on a
// hand-built 2x2 market.
TEST(Satisfaction, TwoByTwoMatchesIndependentEvaluation) {
  MarketInstance inst;
  auto q0 = make_req(2.0, 20.0, 12.0, 6.0, 0.7);
  auto q1 = make_req(1.0, 30.0, 8.0, 3.0, 0.5);
  q0.id = "R0";
  q1.id = "R1";
  auto v0 = make_svc(0.8, 4.0, 10.0, 0.2, 0.4, 2.0, 0.9, 3.0);
  auto v1 = make_svc(0.4, 2.0, 8.0, 0.1, 0.5, 4.0, 0.6, 2.0);
  v0.id = "S0";
  v1.id = "S1";
  inst.requirements = {q0, q1};
  inst.services = {v0, v1};
  MatchMatrix X(2, 2);
  X(0, 0) = 0.3;
  X(0, 1) = 0.1;
  X(1, 0) = 0.2;
  X(1, 1) = 0.0;

  const double phi1 = 0.36, phi2 = 0.28, phi3 = 0.36;
  auto sps = [&](double s, double Q, double tau, double bp, double r, double f, double op,
                 double rep_c, double x) {
    const double t = x * s / r + x * Q / f;
    const double a = t <= tau ? 1 - t / tau : 0;
    const double b = op <= bp ? std::exp(op - bp) : 0;
    return phi1 * a + phi2 * b + phi3 * rep_c;
  };
  auto rps = [&](double s, double Q, double bp, double rep_r, double r, double f, double eps,
                 double ec, double ee, double op, double x) {
    const double E = ec * x * s / r + ee * x * Q / f;
    const double a = E <= eps ? 1 - E / eps : 0;
    const double b = bp >= op ? std::exp(-op / bp) : 0;
    return phi1 * a + phi2 * b + phi3 * rep_r;
  };
  // pair (0,0)
  const double s00 = sps(2, 20, 12, 6, 0.8, 4, 2, 0.9, 0.3);
  const double r00 = rps(2, 20, 6, 0.7, 0.8, 4, 10, 0.2, 0.4, 2, 0.3);
  // pair (0,1): offer 4 below bid 6
  const double s01 = sps(2, 20, 12, 6, 0.4, 2, 4, 0.6, 0.1);
  const double r01 = rps(2, 20, 6, 0.7, 0.4, 2, 8, 0.1, 0.5, 4, 0.1);
  // pair (1,0): offer 2 below bid 3
  const double s10 = sps(1, 30, 8, 3, 0.8, 4, 2, 0.9, 0.2);
  const double r10 = rps(1, 30, 3, 0.5, 0.8, 4, 10, 0.2, 0.4, 2, 0.2);

  const double ars = (s00 * 0.3 + s01 * 0.1 + s10 * 0.2) / 2;
  const double acs = (r00 * 0.3 + r01 * 0.1 + r10 * 0.2) / 2;
  const auto got = satisfaction(inst, X);
  EXPECT_NEAR(got.ars, ars, 1e-15);
  EXPECT_NEAR(got.acs, acs, 1e-15);
  EXPECT_NEAR(got.objective, 0.5 * ars + 0.5 * acs, 1e-15);
}

}  // namespace
