#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bearline/solver.hpp"

using namespace bearline;

TEST(Lbfgs, QuadraticBowl) {
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad = 2.0 * x;
    return x.squaredNorm();
  };
  LbfgsOptions opt;
  opt.grad_tol = 1e-10;
  const auto res = lbfgs_minimize(fn, Eigen::VectorXd::Constant(5, 3.0), opt);
  EXPECT_TRUE(res.converged);
  EXPECT_LT(res.x.norm(), 1e-8);
}

TEST(Lbfgs, Rosenbrock) {
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    grad.resize(2);
    grad(0) = -2.0 * a - 400.0 * x(0) * b;
    grad(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  LbfgsOptions opt;
  opt.max_iterations = 500;
  opt.grad_tol = 1e-8;
  const auto res = lbfgs_minimize(fn, Eigen::Vector2d(-1.2, 1.0), opt);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.x(0), 1.0, 1e-6);
  EXPECT_NEAR(res.x(1), 1.0, 1e-6);
}

TEST(Lbfgs, MonotoneAcceptedIterates) {
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    grad.resize(2);
    grad(0) = -2.0 * a - 400.0 * x(0) * b;
    grad(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  std::vector<double> values;
  LbfgsOptions opt;
  opt.max_iterations = 100;
  lbfgs_minimize(fn, Eigen::Vector2d(-1.2, 1.0), opt, nullptr,
                 [&](int, double f) { values.push_back(f); });
  for (std::size_t i = 1; i < values.size(); ++i) EXPECT_LE(values[i], values[i - 1] + 1e-12);
}

TEST(Lbfgs, FrozenCoordinatesStayPut) {
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad = 2.0 * (x - Eigen::VectorXd::Constant(x.size(), 5.0));
    return (x - Eigen::VectorXd::Constant(x.size(), 5.0)).squaredNorm();
  };
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(3);
  mask(1) = 0.0;
  LbfgsOptions opt;
  opt.grad_tol = 1e-10;
  const auto res = lbfgs_minimize(fn, Eigen::VectorXd::Zero(3), opt, &mask);
  EXPECT_NEAR(res.x(0), 5.0, 1e-8);
  EXPECT_DOUBLE_EQ(res.x(1), 0.0);
  EXPECT_NEAR(res.x(2), 5.0, 1e-8);
}

TEST(Lbfgs, NonFiniteValuesTriggerBacktracking) {
  // Objective undefined for x > 2; the search must stay in the domain.
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad.resize(1);
    if (x(0) > 2.0) {
      grad(0) = 0.0;
      return std::numeric_limits<double>::infinity();
    }
    grad(0) = 2.0 * (x(0) - 1.9);
    return (x(0) - 1.9) * (x(0) - 1.9);
  };
  LbfgsOptions opt;
  const auto res = lbfgs_minimize(fn, Eigen::VectorXd::Constant(1, -30.0), opt);
  EXPECT_NEAR(res.x(0), 1.9, 1e-6);
}

namespace {

// min f subject to eq/ineq given as std::functions; dense-gradient adapter
// for the AL driver.
struct ToyProblem {
  using Fn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
  Fn cost;
  std::vector<Fn> eqs;
  std::vector<Fn> ineqs;
  Eigen::Index dim;
  Eigen::VectorXd mask;

  Eigen::Index dimension() const { return dim; }
  const Eigen::VectorXd& free_mask() const { return mask; }

  void evaluate(const Eigen::VectorXd& x, double& c, Eigen::VectorXd& eq, Eigen::VectorXd& ineq) {
    Eigen::VectorXd g(dim);
    c = cost(x, g);
    eq.resize(static_cast<Eigen::Index>(eqs.size()));
    for (std::size_t i = 0; i < eqs.size(); ++i) eq(i) = eqs[i](x, g);
    ineq.resize(static_cast<Eigen::Index>(ineqs.size()));
    for (std::size_t j = 0; j < ineqs.size(); ++j) ineq(j) = ineqs[j](x, g);
  }

  void merit_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& eq_coeff,
                      const Eigen::VectorXd& ineq_coeff, Eigen::VectorXd& grad) {
    Eigen::VectorXd g(dim);
    cost(x, g);
    grad = g;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
      eqs[i](x, g);
      grad += eq_coeff(static_cast<Eigen::Index>(i)) * g;
    }
    for (std::size_t j = 0; j < ineqs.size(); ++j) {
      ineqs[j](x, g);
      grad += ineq_coeff(static_cast<Eigen::Index>(j)) * g;
    }
  }
};

}  // namespace

TEST(AugmentedLagrangian, EqualityConstrainedQuadratic) {
  // min x^2 + y^2 s.t. x + y = 1 -> (0.5, 0.5).
  ToyProblem prob;
  prob.dim = 2;
  prob.mask = Eigen::VectorXd::Ones(2);
  prob.cost = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  prob.eqs.push_back([](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = Eigen::Vector2d(1.0, 1.0);
    return x(0) + x(1) - 1.0;
  });
  AlOptions opt;
  opt.eq_tol = 1e-8;
  opt.optimality_tol = 1e-8;
  opt.max_outer = 50;
  const auto res = augmented_lagrangian_solve(prob, Eigen::Vector2d(3.0, -7.0), opt);
  EXPECT_TRUE(res.feasible);
  EXPECT_NEAR(res.x(0), 0.5, 1e-6);
  EXPECT_NEAR(res.x(1), 0.5, 1e-6);
}

TEST(AugmentedLagrangian, ActiveAndInactiveInequalities) {
  // min (x+2)^2 s.t. x >= 0 -> x = 0; the bound x <= 10 stays inactive.
  ToyProblem prob;
  prob.dim = 1;
  prob.mask = Eigen::VectorXd::Ones(1);
  prob.cost = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g(0) = 2.0 * (x(0) + 2.0);
    return (x(0) + 2.0) * (x(0) + 2.0);
  };
  prob.ineqs.push_back([](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g(0) = -1.0;
    return -x(0);  // -x <= 0
  });
  prob.ineqs.push_back([](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g(0) = 1.0;
    return x(0) - 10.0;
  });
  AlOptions opt;
  opt.ineq_tol = 1e-8;
  opt.optimality_tol = 1e-8;
  opt.max_outer = 60;
  const auto res = augmented_lagrangian_solve(prob, Eigen::VectorXd::Constant(1, 4.0), opt);
  EXPECT_TRUE(res.feasible);
  EXPECT_NEAR(res.x(0), 0.0, 1e-5);
}

TEST(AugmentedLagrangian, NonconvexExclusionDisc) {
  // min distance^2 to a goal with a keep-out disc in the way.
  const Eigen::Vector2d goal(2.0, 0.0);
  ToyProblem prob;
  prob.dim = 2;
  prob.mask = Eigen::VectorXd::Ones(2);
  prob.cost = [goal](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * (x - goal);
    return (x - goal).squaredNorm();
  };
  prob.ineqs.push_back([](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double d = x.norm();
    g = -x / std::max(d, 1e-9);
    return 1.0 - d;  // stay outside the unit disc
  });
  AlOptions opt;
  opt.max_outer = 80;
  const auto res = augmented_lagrangian_solve(prob, Eigen::Vector2d(-2.0, 0.7), opt);
  EXPECT_TRUE(res.feasible);
  EXPECT_GE(res.x.norm(), 1.0 - 1e-3);
  EXPECT_NEAR((res.x - goal).norm(), 0.0, 1e-3 + (res.x.norm() - 2.0));
  // Optimum is the goal itself (outside the disc).
  EXPECT_NEAR(res.x(0), 2.0, 1e-3);
  EXPECT_NEAR(res.x(1), 0.0, 1e-3);
}
