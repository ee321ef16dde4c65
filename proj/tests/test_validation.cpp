#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bearline/validation.hpp"
#include "test_helpers.hpp"

using namespace bearline;
using bearline::testing::case1_scenario;
using bearline::testing::feasible_circle_decision;

namespace {
Scenario circle_scenario(std::uint64_t seed = 1) {
  Scenario s = case1_scenario(seed);
  s.solver.degree = 24;
  return s;
}
}  // namespace

TEST(RunCampaign, NoiselessConsistency) {
  Scenario s = circle_scenario();
  s.noise_var_az = s.noise_var_el = 1e-24;
  s.process_var = 0.0;
  s.target.prior.covariance = 1e-10 * Eigen::Matrix2d::Identity();
  s.usv.prior.covariance = 1e-10 * Eigen::Matrix2d::Identity();
  const auto trajs = feasible_circle_decision(s).make_trajectories(s);
  const auto summary = run_campaign(s, trajs, 5, 99);
  for (int o = 0; o < 2; ++o) EXPECT_LT(summary.objects[o].rmse, 1e-4);
}

TEST(RunCampaign, DeterministicSummaries) {
  Scenario s = circle_scenario(4);
  const auto trajs = feasible_circle_decision(s).make_trajectories(s);
  const auto a = run_campaign(s, trajs, 40, 1234);
  const auto b = run_campaign(s, trajs, 40, 1234);
  for (int o = 0; o < 2; ++o) {
    EXPECT_EQ(a.objects[o].rmse, b.objects[o].rmse);
    EXPECT_EQ(a.objects[o].sd, b.objects[o].sd);
    EXPECT_EQ(a.objects[o].root_pcrlb, b.objects[o].root_pcrlb);
    EXPECT_EQ(a.objects[o].histogram.counts, b.objects[o].histogram.counts);
  }
  const auto c = run_campaign(s, trajs, 40, 4321);
  EXPECT_NE(a.objects[0].rmse, c.objects[0].rmse);
}

TEST(RunCampaign, RmseBiasSdIdentityAndHistogramCoverage) {
  Scenario s = circle_scenario(6);
  const auto trajs = feasible_circle_decision(s).make_trajectories(s);
  const auto summary = run_campaign(s, trajs, 120, 5);
  for (int o = 0; o < 2; ++o) {
    const auto& st = summary.objects[o];
    EXPECT_NEAR(st.rmse * st.rmse, st.bias * st.bias + st.sd * st.sd,
                1e-9 * std::max(1.0, st.rmse * st.rmse));
    int total = 0;
    for (int c : st.histogram.counts) total += c;
    EXPECT_EQ(total, summary.trial_count);
    EXPECT_EQ(st.histogram.counts.size(), 30u);
  }
}

TEST(RunCampaign, UsvBoundRespectedByEstimator) {
  // The circle passes straight through the communication point, so the USV
  // collects real measurements; the estimator cannot beat the matched bound.
  Scenario s = circle_scenario(8);
  const auto trajs = feasible_circle_decision(s).make_trajectories(s);
  const auto summary = run_campaign(s, trajs, 300, 17);
  const auto& usv = summary.of(ObjectId::collaborating_usv);
  EXPECT_GT(usv.root_pcrlb, 0.0);
  EXPECT_LT(usv.root_pcrlb, 14.0);  // tighter than the prior-only bound
  EXPECT_GE(usv.rmse, 0.8 * usv.root_pcrlb);
}

TEST(RunCampaign, RefusesInfeasibleTrajectories) {
  Scenario s = circle_scenario(9);
  auto d = feasible_circle_decision(s);
  d.control_points[0].setConstant(0.9);  // roll bound violated, dynamics broken
  const auto trajs = d.make_trajectories(s);
  EXPECT_THROW(run_campaign(s, trajs, 5, 1), ConfigError);
}

TEST(CompareCampaigns, IdentityAndMismatchGuard) {
  Scenario s = circle_scenario(10);
  const auto trajs = feasible_circle_decision(s).make_trajectories(s);
  const auto a = run_campaign(s, trajs, 60, 7);
  const auto cmp = compare_campaigns(a, a);
  for (int o = 0; o < 2; ++o) {
    EXPECT_DOUBLE_EQ(cmp.sd_ratio[o], 1.0);
    EXPECT_DOUBLE_EQ(cmp.rmse_ratio[o], 1.0);
    EXPECT_DOUBLE_EQ(cmp.root_pcrlb_ratio[o], 1.0);
  }

  Scenario other = s;
  other.target.position = Eigen::Vector3d(50, 50, 0);
  other.constraints.nfz_center = Eigen::Vector2d(50, 50);
  const auto trajs_b = feasible_circle_decision(other).make_trajectories(other);
  const auto b = run_campaign(other, trajs_b, 60, 7);
  EXPECT_THROW(compare_campaigns(a, b), ConfigError);
}

TEST(Certificate, FeasibleCirclePassesDenseRecheck) {
  Scenario s = circle_scenario(11);
  const auto trajs = feasible_circle_decision(s).make_trajectories(s);
  const auto cert = certify_constraints(s, trajs);
  EXPECT_TRUE(cert.passed) << "nfz " << cert.nfz_worst << " box " << cert.box_worst << " roll "
                           << cert.roll_worst;
}

TEST(Certificate, FlagsNfzIntrusion) {
  Scenario s = circle_scenario(12);
  s.constraints.nfz_center = s.constraints.comm_center;  // circle now crosses it
  const auto trajs = feasible_circle_decision(s).make_trajectories(s);
  const auto cert = certify_constraints(s, trajs);
  EXPECT_FALSE(cert.passed);
  EXPECT_LT(cert.nfz_worst, -0.5);
}

TEST(SeedHierarchy, TrialStreamsIndependent) {
  // Child seeds differ and don't collide across nearby masters.
  const auto a0 = derive_seed(100, rng_stream::kTrial, 0);
  const auto a1 = derive_seed(100, rng_stream::kTrial, 1);
  const auto b0 = derive_seed(101, rng_stream::kTrial, 0);
  EXPECT_NE(a0, a1);
  EXPECT_NE(a0, b0);
}
