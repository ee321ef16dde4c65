#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bearline/planner.hpp"
#include "test_helpers.hpp"

using namespace bearline;
using bearline::testing::case1_scenario;

TEST(HeuristicRacetrack, GeometricContract) {
  Scenario s = case1_scenario(21);
  const PlatformTrajectory traj = heuristic_racetrack(s);
  const double t_f = traj.final_time();
  EXPECT_GT(t_f, 20.0);
  EXPECT_LT(t_f, 120.0);

  // Minimum distance to the target stays at or outside the NFZ radius and
  // the terminal point lands inside the communication circle.
  double min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 2000; ++i) {
    const UavState st = traj.state_at(t_f * i / 2000);
    min_dist = std::min(min_dist,
                        (Eigen::Vector2d(st.x, st.y) - s.constraints.nfz_center).norm());
  }
  EXPECT_GE(min_dist, s.constraints.nfz_radius - 0.5);

  const UavState end = traj.state_at(t_f);
  EXPECT_LE((Eigen::Vector2d(end.x, end.y) - s.constraints.comm_center).norm(),
            s.constraints.comm_radius);
}

TEST(HeuristicRacetrack, FeasiblePerConstraintReport) {
  Scenario s = case1_scenario(22);
  const DecisionVector d = racetrack_decision(s);
  const auto rep = evaluate_constraints(d, s);
  EXPECT_GE(rep.dynamics_margin, 0.0) << "max defect " << rep.max_dynamics_residual;
  EXPECT_GE(rep.worst_geometry_margin(), -s.solver.constraint_tol)
      << "nfz " << rep.nfz_margin << " box " << rep.box_margin << " roll " << rep.roll_margin
      << " comm " << rep.comm_margin;
}

TEST(HeuristicRacetrack, DeterministicAndInfeasibleGeometryRejected) {
  Scenario s = case1_scenario(23);
  const DecisionVector a = racetrack_decision(s);
  const DecisionVector b = racetrack_decision(s);
  EXPECT_EQ(a.final_time, b.final_time);
  EXPECT_EQ(a.state_points[0], b.state_points[0]);
  EXPECT_EQ(a.control_points[0], b.control_points[0]);

  Scenario bad = s;
  bad.usv.position = Eigen::Vector3d(60.0, 0.0, 0.0);  // comm circle inside NFZ
  bad.constraints.comm_center = Eigen::Vector2d(60.0, 0.0);
  EXPECT_THROW(racetrack_decision(bad), std::runtime_error);
}

TEST(InitialGuess, RacetrackSeedReproducesHeuristic) {
  Scenario s = case1_scenario(24);
  const DecisionVector seed = initial_guess(s, SeedStrategy::racetrack_seed);
  const PlatformTrajectory heuristic = heuristic_racetrack(s);
  EXPECT_EQ(seed.final_time, heuristic.final_time());
  EXPECT_EQ(seed.state_points[0], heuristic.state_curve.control_points());
  EXPECT_EQ(seed.control_points[0], heuristic.control_curve.control_points());
}

TEST(InitialGuess, LoiterSeedNearlySatisfiesDynamics) {
  Scenario s = case1_scenario(25);
  const DecisionVector seed = initial_guess(s, SeedStrategy::loiter_seed);
  const auto trajs = seed.make_trajectories(s);
  const Eigen::MatrixXd res =
      dynamics_residuals(trajs[0].state_curve, trajs[0].control_curve, s.uavs[0].params);
  // Node-wise defect of the fitted constant-roll circle.
  double worst = 0.0;
  for (int j = 0; j < res.cols(); ++j) worst = std::max(worst, res.col(j).norm());
  EXPECT_LT(worst, 1e-3);
}

TEST(InitialGuess, MultistartSeedsDistinctAndReproducible) {
  Scenario s = case1_scenario(26);
  std::vector<DecisionVector> seeds;
  for (int k = 0; k < 8; ++k)
    seeds.push_back(initial_guess(s, SeedStrategy::random_multistart, k));
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b)
      EXPECT_NE(seeds[a].state_points[0], seeds[b].state_points[0]);

  const DecisionVector again = initial_guess(s, SeedStrategy::random_multistart, 3);
  EXPECT_EQ(again.state_points[0], seeds[3].state_points[0]);
  EXPECT_EQ(again.final_time, seeds[3].final_time);
}

TEST(Solve, SmallProblemConvergesAndBeatsItsSeed) {
  Scenario s = case1_scenario(27);
  s.solver.degree = 16;
  s.solver.multistart = 2;
  s.solver.max_outer = 80;
  s.solver.max_inner = 120;

  const auto [seed_cost, seed_breakdown] =
      evaluate_cost(initial_guess(s, SeedStrategy::racetrack_seed), s);
  const OptimizationResult result = solve(s);
  EXPECT_TRUE(result.converged) << "dyn margin " << result.report.dynamics_margin << " geom "
                                << result.report.worst_geometry_margin();
  EXPECT_LT(result.cost, seed_cost);
  EXPECT_GE(result.report.dynamics_margin, 0.0);
  EXPECT_GE(result.report.worst_geometry_margin(), -s.solver.constraint_tol);
  // Terminal point inside the communication circle.
  const UavState end = result.trajectories[0].state_at(result.decision.final_time);
  EXPECT_LE((Eigen::Vector2d(end.x, end.y) - s.constraints.comm_center).norm(),
            s.constraints.comm_radius + s.solver.constraint_tol);
}

TEST(Solve, DeterministicAcrossRuns) {
  Scenario s = case1_scenario(28);
  s.solver.degree = 10;
  s.solver.multistart = 1;
  s.solver.max_outer = 30;
  s.solver.max_inner = 60;
  const OptimizationResult a = solve(s);
  const OptimizationResult b = solve(s);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_EQ(a.decision.flatten(), b.decision.flatten());
  EXPECT_EQ(a.chosen_seed, b.chosen_seed);
}
