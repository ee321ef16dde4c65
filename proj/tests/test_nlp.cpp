#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "bearline/trajectory_nlp.hpp"
#include "test_helpers.hpp"

using namespace bearline;
using bearline::testing::case1_scenario;
using bearline::testing::feasible_circle_decision;

TEST(DecisionVector, FlattenIsLosslessBijection) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-50.0, 50.0);
  DecisionVector d;
  d.state_points.push_back(Eigen::MatrixXd::NullaryExpr(4, 9, [&] { return uni(rng); }));
  d.control_points.push_back(Eigen::MatrixXd::NullaryExpr(1, 9, [&] { return uni(rng); }));
  d.state_points.push_back(Eigen::MatrixXd::NullaryExpr(6, 9, [&] { return uni(rng); }));
  d.control_points.push_back(Eigen::MatrixXd::NullaryExpr(3, 9, [&] { return uni(rng); }));
  d.final_time = 42.5;

  const Eigen::VectorXd flat = d.flatten();
  const DecisionVector back = DecisionVector::unflatten(flat, d);
  EXPECT_EQ(back.final_time, d.final_time);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(back.state_points[i], d.state_points[i]);
    EXPECT_EQ(back.control_points[i], d.control_points[i]);
  }
  EXPECT_EQ(back.flatten(), flat);
}

TEST(EvaluateCost, PriorOnlyCostMatchesHandSum) {
  // All objects effectively out of frame: cost collapses to the weighted
  // prior traces plus the time term, 0.5*200 + 0.5*200 + 0.5*30 = 215.
  Scenario s = case1_scenario();
  s.solver.degree = 10;
  DecisionVector d;
  const int n = s.solver.degree;
  Eigen::MatrixXd st = Eigen::MatrixXd::Zero(4, n + 1);
  // Park far east of everything, heading away so nothing enters the camera.
  for (int j = 0; j <= n; ++j) {
    st(state_row::kX, j) = 400.0 + 25.0 * (30.0 * j / n);
    st(state_row::kY, j) = 550.0;
    st(state_row::kZ, j) = -50.0;
    st(state_row::kHeading, j) = 0.0;
  }
  d.state_points.push_back(st);
  d.control_points.push_back(Eigen::MatrixXd::Zero(1, n + 1));
  d.final_time = 30.0;

  const auto [cost, breakdown] = evaluate_cost(d, s);
  EXPECT_NEAR(cost, 215.0, 0.01);
  EXPECT_NEAR(breakdown.target_term, 100.0, 0.01);
  EXPECT_NEAR(breakdown.usv_term, 100.0, 0.01);
  EXPECT_NEAR(breakdown.time_term, 15.0, 1e-12);
  EXPECT_NEAR(breakdown.target_trace, 200.0, 0.01);
}

TEST(EvaluateCost, ZeroTimeWeightRemovesTimeDependence) {
  Scenario s = case1_scenario();
  s.solver.degree = 10;
  s.weights.w_time = 0.0;
  DecisionVector a = feasible_circle_decision(s, 90.0, 30.0);
  DecisionVector b = a;
  b.final_time = 55.0;  // identical sampled geometry, different clock
  const auto [cost_a, ba] = evaluate_cost(a, s);
  const auto [cost_b, bb] = evaluate_cost(b, s);
  EXPECT_NEAR(cost_a, cost_b, 1e-12 * std::max(1.0, std::abs(cost_a)));
}

TEST(EvaluateConstraints, StraightLineThroughNfzCenter) {
  Scenario s = case1_scenario();
  s.solver.degree = 10;
  const int n = s.solver.degree;
  DecisionVector d;
  Eigen::MatrixXd st = Eigen::MatrixXd::Zero(4, n + 1);
  // South-to-north line crossing the center exactly at the middle node.
  for (int j = 0; j <= n; ++j) {
    const double t = 24.0 * j / n;
    st(state_row::kX, j) = -300.0 + 25.0 * t;
    st(state_row::kY, j) = 0.0;
    st(state_row::kZ, j) = -50.0;
  }
  d.state_points.push_back(st);
  d.control_points.push_back(Eigen::MatrixXd::Zero(1, n + 1));
  d.final_time = 24.0;

  const auto rep = evaluate_constraints(d, s);
  EXPECT_NEAR(rep.nfz_margin, -s.constraints.nfz_radius, 1e-6);
  EXPECT_LT(rep.worst_geometry_margin(), 0.0);
}

TEST(EvaluateConstraints, DefaultRadiiComeFromTheParameterTable) {
  const Scenario s = case1_scenario();
  EXPECT_DOUBLE_EQ(s.constraints.nfz_radius, 100.0);
  EXPECT_DOUBLE_EQ(s.constraints.comm_radius, 15.0);
}

TEST(EvaluateConstraints, HandBuiltLoiterIsFeasible) {
  Scenario s = case1_scenario();
  s.solver.degree = 24;
  const DecisionVector d = feasible_circle_decision(s, 90.0, 30.0);
  const auto rep = evaluate_constraints(d, s);
  EXPECT_GE(rep.dynamics_margin, 0.0);
  EXPECT_GE(rep.worst_geometry_margin(), 0.0) << "nfz " << rep.nfz_margin << " box "
                                              << rep.box_margin << " comm " << rep.comm_margin;
  EXPECT_GE(rep.comm_margin, 0.0);
}

TEST(TrajectoryNlp, CostGradientMatchesFiniteDifferences) {
  Scenario s = case1_scenario(5);
  s.solver.degree = 8;
  const auto starts = s.resolve_starts();
  TrajectoryNlp nlp(s, starts);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> jitter(0.0, 1.0);
  int checked = 0;
  for (int point = 0; point < 20; ++point) {
    DecisionVector d = feasible_circle_decision(s, 80.0 + 2.0 * point, 28.0 + 0.5 * point);
    // Perturb so the check is not at a symmetric special point.
    for (int j = 0; j <= s.solver.degree; ++j) {
      d.state_points[0](state_row::kX, j) += 5.0 * jitter(rng);
      d.state_points[0](state_row::kY, j) += 5.0 * jitter(rng);
      d.state_points[0](state_row::kHeading, j) += 0.05 * jitter(rng);
      d.control_points[0](control_row::kRoll, j) += 0.02 * jitter(rng);
    }
    Eigen::VectorXd grad;
    nlp.cost_with_gradient(d, &grad);

    // Probe a spread of coordinates with central differences.
    const Eigen::VectorXd x0 = d.flatten();
    for (int probe = 0; probe < 12; ++probe) {
      const Eigen::Index idx = (probe * 13 + point) % x0.size();
      const double h = std::max(1e-6, 1e-7 * std::abs(x0(idx)));
      Eigen::VectorXd xp = x0, xm = x0;
      xp(idx) += h;
      xm(idx) -= h;
      const double fp = nlp.cost_with_gradient(DecisionVector::unflatten(xp, d), nullptr);
      const double fm = nlp.cost_with_gradient(DecisionVector::unflatten(xm, d), nullptr);
      const double fd = (fp - fm) / (2 * h);
      const double tol = 1e-4 * std::max(std::abs(fd), 1e-3);
      EXPECT_NEAR(grad(idx), fd, tol) << "coordinate " << idx;
      ++checked;
    }
  }
  EXPECT_GE(checked, 200);
}

TEST(TrajectoryNlp, MeritGradientMatchesFiniteDifferences) {
  // Full merit surface (cost + weighted constraints) against central
  // differences in solver coordinates.
  Scenario s = case1_scenario(7);
  s.solver.degree = 6;
  const auto starts = s.resolve_starts();
  TrajectoryNlp nlp(s, starts);
  DecisionVector d = feasible_circle_decision(s, 85.0, 26.0);
  const Eigen::VectorXd x0 = nlp.to_solver(d);

  double cost;
  Eigen::VectorXd eq, ineq;
  nlp.evaluate(x0, cost, eq, ineq);
  Eigen::VectorXd eq_coeff(eq.size()), ineq_coeff(ineq.size());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (Eigen::Index i = 0; i < eq_coeff.size(); ++i) eq_coeff(i) = uni(rng);
  for (Eigen::Index j = 0; j < ineq_coeff.size(); ++j) ineq_coeff(j) = std::abs(uni(rng));

  Eigen::VectorXd grad;
  nlp.merit_gradient(x0, eq_coeff, ineq_coeff, grad);

  auto merit = [&](const Eigen::VectorXd& x) {
    double c;
    Eigen::VectorXd e, g;
    nlp.evaluate(x, c, e, g);
    return c + eq_coeff.dot(e) + ineq_coeff.dot(g);
  };
  for (Eigen::Index idx = 0; idx < x0.size(); idx += 3) {
    const double h = 1e-6;
    Eigen::VectorXd xp = x0, xm = x0;
    xp(idx) += h;
    xm(idx) -= h;
    const double fd = (merit(xp) - merit(xm)) / (2 * h);
    EXPECT_NEAR(grad(idx), fd, 1e-4 * std::max(1.0, std::abs(fd))) << "solver coordinate " << idx;
  }
}

TEST(TrajectoryNlp, NonFiniteGuardOnCollapsedFinalTime) {
  Scenario s = case1_scenario();
  s.solver.degree = 6;
  TrajectoryNlp nlp(s, s.resolve_starts());
  DecisionVector d = feasible_circle_decision(s, 85.0, 26.0);
  d.final_time = 0.01;
  double cost;
  Eigen::VectorXd eq, ineq;
  nlp.evaluate(nlp.to_solver(d), cost, eq, ineq);
  EXPECT_TRUE(std::isinf(cost));
}

TEST(TrajectoryNlp, DimensionMismatchRejected) {
  Scenario s = case1_scenario();
  s.solver.degree = 6;
  TrajectoryNlp nlp(s, s.resolve_starts());
  Scenario other = s;
  other.solver.degree = 8;
  const DecisionVector wrong = feasible_circle_decision(other, 85.0, 26.0);
  EXPECT_THROW(nlp.to_solver(wrong), ConfigError);
}
