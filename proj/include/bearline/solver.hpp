#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

namespace bearline {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 200;
  double grad_tol = 1e-6;       // inf-norm of the (masked) gradient
  double f_rel_tol = 1e-14;     // stall detection on relative decrease
  int max_line_search = 30;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;  // gradient tolerance reached
};

// Limited-memory BFGS with a strong-Wolfe line search. `fn(x, grad)` returns
// the objective and fills the gradient; non-finite values make the line
// search backtrack. An optional 0/1 mask freezes coordinates.
template <class Fn>
LbfgsResult lbfgs_minimize(Fn&& fn, Eigen::VectorXd x0, const LbfgsOptions& opt,
                           const Eigen::VectorXd* free_mask = nullptr,
                           const std::function<void(int, double)>& iter_callback = nullptr) {
  const auto dim = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  Eigen::VectorXd grad(dim), grad_new(dim);

  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ++res.evaluations;
    double f = fn(x, g);
    if (free_mask) g.array() *= free_mask->array();
    return f;
  };

  double f = eval(res.x, grad);
  const double c1 = 1e-4, c2 = 0.9;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd p(dim), x_new(dim);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (iter_callback) iter_callback(iter, f);
    if (grad.template lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    p = -grad;
    std::vector<double> alpha_hist(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha_hist[i] = rho_hist[i] * s_hist[i].dot(p);
      p -= alpha_hist[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      p *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(p);
      p += (alpha_hist[i] - beta) * s_hist[i];
    }

    double dphi0 = grad.dot(p);
    if (!(dphi0 < 0.0)) {  // not a descent direction; restart from steepest
      p = -grad;
      dphi0 = grad.dot(p);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      if (!(dphi0 < 0.0)) break;
    }

    // Strong-Wolfe search: bracket then zoom with bisection.
    const double phi0 = f;
    double alpha = 1.0, alpha_prev = 0.0, phi_prev = phi0;
    double alpha_lo = 0.0, alpha_hi = -1.0, phi_lo = phi0;
    double f_new = phi0;
    bool accepted = false;
    for (int ls = 0; ls < opt.max_line_search; ++ls) {
      x_new = res.x + alpha * p;
      f_new = eval(x_new, grad_new);
      const bool bad = !std::isfinite(f_new);
      if (bad || f_new > phi0 + c1 * alpha * dphi0 || (ls > 0 && f_new >= phi_prev)) {
        alpha_lo = alpha_prev;
        phi_lo = phi_prev;
        alpha_hi = alpha;
        break;
      }
      const double dphi = grad_new.dot(p);
      if (std::abs(dphi) <= -c2 * dphi0) {
        accepted = true;
        break;
      }
      if (dphi >= 0.0) {
        alpha_lo = alpha;
        phi_lo = f_new;
        alpha_hi = alpha_prev;
        break;
      }
      alpha_prev = alpha;
      phi_prev = f_new;
      alpha *= 2.5;
    }
    if (!accepted && alpha_hi >= 0.0) {
      for (int z = 0; z < opt.max_line_search; ++z) {
        alpha = 0.5 * (alpha_lo + alpha_hi);
        x_new = res.x + alpha * p;
        f_new = eval(x_new, grad_new);
        const bool bad = !std::isfinite(f_new);
        if (bad || f_new > phi0 + c1 * alpha * dphi0 || f_new >= phi_lo) {
          alpha_hi = alpha;
        } else {
          const double dphi = grad_new.dot(p);
          if (std::abs(dphi) <= -c2 * dphi0) {
            accepted = true;
            break;
          }
          if (dphi * (alpha_hi - alpha_lo) >= 0.0) alpha_hi = alpha_lo;
          alpha_lo = alpha;
          phi_lo = f_new;
        }
        if (alpha_hi >= 0.0 && std::abs(alpha_hi - alpha_lo) < 1e-14) break;
      }
      // Fall back to the best Armijo point found during zoom.
      if (!accepted && std::isfinite(f_new) && f_new < phi0 + c1 * alpha * dphi0) accepted = true;
    }
    if (!accepted || !(f_new < f)) break;  // no further progress

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double f_old = f;
    res.x.swap(x_new);
    grad.swap(grad_new);
    f = f_new;
    res.iterations = iter + 1;
    if (std::abs(f_old - f) <= opt.f_rel_tol * std::max(1.0, std::abs(f_old))) {
      if (grad.template lpNorm<Eigen::Infinity>() <= opt.grad_tol) res.converged = true;
      break;
    }
  }
  res.f = f;
  res.grad = grad;
  if (grad.template lpNorm<Eigen::Infinity>() <= opt.grad_tol) res.converged = true;
  return res;
}

struct AlOptions {
  double eq_tol = 1e-2;        // feasibility target for equalities
  double ineq_tol = 1e-3;      // feasibility target for inequalities
  double optimality_tol = 1e-4;
  int max_outer = 500;
  int max_inner = 200;
  double mu_init = 10.0;
  double mu_growth = 5.0;
  double mu_max = 1e9;
  int lbfgs_memory = 12;
};

struct AlHistoryEntry {
  double cost;
  double merit;
  double eq_violation;
  double ineq_violation;
};

struct AlResult {
  Eigen::VectorXd x;
  double cost = 0.0;
  double eq_violation = 0.0;    // inf-norm
  double ineq_violation = 0.0;  // inf-norm of max(0, g)
  bool feasible = false;
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  int evaluations = 0;
  std::vector<AlHistoryEntry> history;
};

// Problem concept:
//   Eigen::Index dimension() const
//   void evaluate(x, double& cost, VectorXd& eq, VectorXd& ineq)      (g <= 0)
//   void merit_gradient(x, eq_coeff, ineq_coeff, VectorXd& grad)
//     grad = cost gradient + sum_i eq_coeff_i * grad eq_i
//                          + sum_j ineq_coeff_j * grad ineq_j
//   const Eigen::VectorXd& free_mask() const                          (0/1)
//
// Classic multiplier method with the Rockafellar inequality form and a
// LANCELOT-style tolerance ladder.
template <class Problem>
AlResult augmented_lagrangian_solve(Problem& prob, Eigen::VectorXd x0, const AlOptions& opt) {
  AlResult out;
  out.x = std::move(x0);

  double mu = opt.mu_init;
  Eigen::VectorXd lam_eq, lam_in;
  Eigen::VectorXd eq, ineq;
  double cost = 0.0;
  prob.evaluate(out.x, cost, eq, ineq);
  lam_eq = Eigen::VectorXd::Zero(eq.size());
  lam_in = Eigen::VectorXd::Zero(ineq.size());

  auto scaled_violation = [&](const Eigen::VectorXd& e, const Eigen::VectorXd& g) {
    const double ve = e.size() ? e.template lpNorm<Eigen::Infinity>() : 0.0;
    const double vg = g.size() ? g.cwiseMax(0.0).template lpNorm<Eigen::Infinity>() : 0.0;
    return std::max(ve / opt.eq_tol, vg / opt.ineq_tol);
  };

  auto merit_fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    double c;
    Eigen::VectorXd e, g;
    prob.evaluate(x, c, e, g);
    if (!std::isfinite(c)) {
      grad.setZero(prob.dimension());
      return std::numeric_limits<double>::infinity();
    }
    double m = c;
    Eigen::VectorXd eq_coeff(e.size()), in_coeff(g.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      m += lam_eq(i) * e(i) + 0.5 * mu * e(i) * e(i);
      eq_coeff(i) = lam_eq(i) + mu * e(i);
    }
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double t = std::max(0.0, lam_in(j) + mu * g(j));
      m += (t * t - lam_in(j) * lam_in(j)) / (2.0 * mu);
      in_coeff(j) = t;
    }
    if (!std::isfinite(m)) {
      grad.setZero(prob.dimension());
      return std::numeric_limits<double>::infinity();
    }
    prob.merit_gradient(x, eq_coeff, in_coeff, grad);
    return m;
  };

  const double omega_final = opt.optimality_tol;
  double omega = std::max(1e-2, omega_final);
  double eta = std::max(10.0, 2.0 * scaled_violation(eq, ineq));

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    out.outer_iterations = outer + 1;
    LbfgsOptions inner_opt;
    inner_opt.memory = opt.lbfgs_memory;
    inner_opt.max_iterations = opt.max_inner;
    inner_opt.grad_tol = omega;
    const Eigen::VectorXd& mask = prob.free_mask();
    LbfgsResult inner = lbfgs_minimize(merit_fn, out.x, inner_opt, &mask);
    out.x = inner.x;
    out.inner_iterations += inner.iterations;
    out.evaluations += inner.evaluations;

    prob.evaluate(out.x, cost, eq, ineq);
    const double v = scaled_violation(eq, ineq);
    out.history.push_back({cost, inner.f,
                           eq.size() ? eq.template lpNorm<Eigen::Infinity>() : 0.0,
                           ineq.size() ? ineq.cwiseMax(0.0).template lpNorm<Eigen::Infinity>() : 0.0});

    if (v <= 1.0 && omega <= omega_final * (1.0 + 1e-12) && inner.converged) {
      out.converged = true;
      break;
    }
    if (v <= std::max(1.0, eta)) {
      // Good progress: first-order multiplier update, tighten the ladder.
      for (Eigen::Index i = 0; i < eq.size(); ++i) lam_eq(i) += mu * eq(i);
      for (Eigen::Index j = 0; j < ineq.size(); ++j)
        lam_in(j) = std::max(0.0, lam_in(j) + mu * ineq(j));
      eta = std::max(1.0, 0.25 * v);
      omega = std::max(omega_final, 0.2 * omega);
    } else {
      if (mu >= opt.mu_max && inner.converged) break;  // cannot push further
      mu = std::min(mu * opt.mu_growth, opt.mu_max);
      omega = std::max(omega_final, 0.5 * omega);
    }
  }

  out.cost = cost;
  out.eq_violation = eq.size() ? eq.template lpNorm<Eigen::Infinity>() : 0.0;
  out.ineq_violation = ineq.size() ? ineq.cwiseMax(0.0).template lpNorm<Eigen::Infinity>() : 0.0;
  out.feasible = out.eq_violation <= opt.eq_tol && out.ineq_violation <= opt.ineq_tol;
  return out;
}

}  // namespace bearline
