#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "bearline/errors.hpp"

namespace bearline {

// Binomial coefficient by multiplicative recurrence in floating point.
// Exact up to the 53-bit mantissa; supported degree range is n <= 60.
inline double binomial(int n, int j) {
  if (j < 0 || j > n) return 0.0;
  if (j > n - j) j = n - j;
  double c = 1.0;
  for (int i = 1; i <= j; ++i) c *= static_cast<double>(n - i + 1) / static_cast<double>(i);
  return c;
}

inline constexpr int kMaxDegree = 60;

namespace detail {
inline void check_degree(int n) {
  if (n < 1 || n > kMaxDegree)
    throw DomainError("Bernstein degree must be in [1, " + std::to_string(kMaxDegree) +
                      "], got " + std::to_string(n));
}
inline void check_final_time(double t_f) {
  if (!(t_f > 0.0) || !std::isfinite(t_f))
    throw DomainError("final_time must be positive and finite");
}
}  // namespace detail

// b_{j,n}(t) = C(n,j) t^j (t_f - t)^{n-j} / t_f^n, evaluated in normalized
// time tau = t/t_f for stability at high degree.
inline double bernstein_basis(int j, int n, double t, double t_f) {
  detail::check_degree(n);
  detail::check_final_time(t_f);
  if (j < 0 || j > n) throw DomainError("basis index j out of [0, n]");
  if (t < 0.0 || t > t_f) throw DomainError("t outside [0, t_f]");
  const double tau = t / t_f;
  return binomial(n, j) * std::pow(tau, j) * std::pow(1.0 - tau, n - j);
}

// Row vector of all n+1 basis values at normalized time tau in [0, 1].
inline Eigen::RowVectorXd bernstein_basis_row(int n, double tau) {
  Eigen::RowVectorXd row(n + 1);
  for (int j = 0; j <= n; ++j)
    row(j) = binomial(n, j) * std::pow(tau, j) * std::pow(1.0 - tau, n - j);
  return row;
}

// Equidistant collocation nodes t_j = (j/n) t_f.
inline std::vector<double> time_nodes(int n, double t_f) {
  detail::check_degree(n);
  detail::check_final_time(t_f);
  std::vector<double> nodes(n + 1);
  for (int j = 0; j <= n; ++j) nodes[j] = (static_cast<double>(j) / n) * t_f;
  return nodes;
}

class BernsteinCurve;
struct DifferentiationMatrix;

// Degree-n vector-valued polynomial on [0, t_f] in Bernstein form.
// Immutable value type; control points are d x (n+1), one column per point.
class BernsteinCurve {
 public:
  BernsteinCurve(Eigen::MatrixXd control_points, double final_time)
      : points_(std::move(control_points)), t_f_(final_time) {
    detail::check_final_time(t_f_);
    const int cols = static_cast<int>(points_.cols());
    if (cols < 2) throw DomainError("curve needs degree >= 1 (at least two control points)");
    detail::check_degree(cols - 1);
    if (points_.rows() < 1) throw DomainError("curve codomain dimension must be >= 1");
  }

  int degree() const { return static_cast<int>(points_.cols()) - 1; }
  int dimension() const { return static_cast<int>(points_.rows()); }
  double final_time() const { return t_f_; }
  const Eigen::MatrixXd& control_points() const { return points_; }

  Eigen::VectorXd eval(double t) const {
    if (t < 0.0 || t > t_f_) throw DomainError("curve_eval: t outside [0, t_f]");
    const int n = degree();
    return points_ * bernstein_basis_row(n, t / t_f_).transpose();
  }

  // Derivative is a new curve of degree n-1 with points (n/t_f)(p_{j+1}-p_j).
  BernsteinCurve derivative() const {
    const int n = degree();
    if (n < 2) {
      Eigen::MatrixXd pts(points_.rows(), 2);
      const Eigen::VectorXd slope = (n / t_f_) * (points_.col(1) - points_.col(0));
      pts.col(0) = slope;
      pts.col(1) = slope;
      return BernsteinCurve(pts, t_f_);
    }
    Eigen::MatrixXd pts = (n / t_f_) * (points_.rightCols(n) - points_.leftCols(n));
    return BernsteinCurve(std::move(pts), t_f_);
  }

  std::vector<double> nodes() const { return time_nodes(degree(), t_f_); }

  // Componentwise convex-hull bounds: column 0 = min, column 1 = max.
  Eigen::MatrixX2d hull_bounds() const {
    Eigen::MatrixX2d b(points_.rows(), 2);
    b.col(0) = points_.rowwise().minCoeff();
    b.col(1) = points_.rowwise().maxCoeff();
    return b;
  }

 private:
  Eigen::MatrixXd points_;
  double t_f_;
};

// Linear map from degree-n control points (as columns of a d x (n+1) matrix)
// to degree-(n-1) derivative control points: P * entries.
struct DifferentiationMatrix {
  int degree;
  double final_time;
  Eigen::MatrixXd entries;  // (n+1) x n

  Eigen::MatrixXd apply(const Eigen::MatrixXd& control_points) const {
    if (control_points.cols() != degree + 1)
      throw ConfigError("differentiation matrix degree mismatch");
    return control_points * entries;
  }
};

inline DifferentiationMatrix differentiation_matrix(int n, double t_f) {
  detail::check_degree(n);
  detail::check_final_time(t_f);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, n);
  const double scale = n / t_f;
  for (int j = 0; j < n; ++j) {
    d(j, j) = -scale;
    d(j + 1, j) = scale;
  }
  return DifferentiationMatrix{n, t_f, std::move(d)};
}

}  // namespace bearline
