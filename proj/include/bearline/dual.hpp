#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace bearline {

// Forward-mode scalar with an N-dimensional tangent. Used to differentiate
// the per-node information terms with respect to the handful of pose
// variables they depend on; the chain to Bernstein control points is linear
// and applied outside.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit from constants

  static Dual seed(double value, std::size_t k) {
    Dual x(value);
    x.d[k] = 1.0;
    return x;
  }

  Dual operator-() const {
    Dual r(-v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend Dual operator/(Dual a, const Dual& b) { return a /= b; }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
};

template <std::size_t N>
Dual<N> chain(double value, double slope, const Dual<N>& x) {
  Dual<N> r(value);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = slope * x.d[i];
  return r;
}

template <std::size_t N>
Dual<N> sin(const Dual<N>& x) {
  return chain(std::sin(x.v), std::cos(x.v), x);
}
template <std::size_t N>
Dual<N> cos(const Dual<N>& x) {
  return chain(std::cos(x.v), -std::sin(x.v), x);
}
template <std::size_t N>
Dual<N> tan(const Dual<N>& x) {
  const double t = std::tan(x.v);
  return chain(t, 1.0 + t * t, x);
}
template <std::size_t N>
Dual<N> tanh(const Dual<N>& x) {
  const double t = std::tanh(x.v);
  return chain(t, 1.0 - t * t, x);
}
template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.v);
  return chain(e, e, x);
}
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.v);
  return chain(s, 0.5 / s, x);
}
template <std::size_t N>
Dual<N> atan(const Dual<N>& x) {
  return chain(std::atan(x.v), 1.0 / (1.0 + x.v * x.v), x);
}

template <std::size_t N>
Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
  Dual<N> r(std::atan2(y.v, x.v));
  const double q = x.v * x.v + y.v * y.v;
  for (std::size_t i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / q;
  return r;
}

template <std::size_t N>
Dual<N> hypot2d(const Dual<N>& x, const Dual<N>& y) {
  return sqrt(x * x + y * y);
}

// Generic accessors so numeric code can be written once for double and Dual.
inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) {
  return x.v;
}

}  // namespace bearline
