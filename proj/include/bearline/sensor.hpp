#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>

#include "bearline/dual.hpp"
#include "bearline/errors.hpp"
#include "bearline/vehicle.hpp"

namespace bearline {

enum class MountKind { fixed_fov, gimballed };

// Fixed mounts carry a constant boresight: azimuth rotates the camera axis
// from the body x-axis about body z, elevation tilts it down. Gimballed
// mounts ignore the boresight fields and take commanded angles instead.
struct CameraMount {
  MountKind kind = MountKind::fixed_fov;
  double boresight_azimuth = kPi / 4;
  double boresight_elevation = 0.0;
};

struct FovSpec {
  double az_min = -kPi / 4;
  double az_max = kPi / 4;
  double el_min = 0.2;
  double el_max = 1.2;
  double steepness = 50.0;  // 1/rad

  void validate() const {
    if (!(az_min < az_max)) throw ValidationError("fov.az_min", "must be < az_max");
    if (!(el_min < el_max)) throw ValidationError("fov.el_min", "must be < el_max");
    if (!(steepness > 0.0)) throw ValidationError("fov.steepness", "must be > 0");
  }
};

struct BearingObservation {
  double azimuth = 0.0;    // rad, (-pi, pi]
  double elevation = 0.0;  // rad, (-pi/2, pi/2)
  double time = 0.0;       // s
  UavState observer_state;
  double visibility = 1.0;  // smooth indicator in [0, 1]
  double noise_var_az = 7.5e-6;  // rad^2
  double noise_var_el = 7.5e-6;  // rad^2
};

template <class T>
struct Vec3T {
  T x, y, z;
};
using Vec3 = Vec3T<double>;

// Inertial-frame position of the object relative to the observer.
inline Eigen::Vector3d relative_position(const Eigen::Vector3d& observer,
                                         const Eigen::Vector3d& object) {
  return object - observer;
}

namespace detail {

// 3-2-1 inertial->body rotation followed by the azimuth-then-elevation
// camera rotation. Positive elevation depresses the boresight (NED z-down).
template <class T>
Vec3T<T> rotate_z(const Vec3T<T>& v, const T& angle) {
  using std::cos;
  using std::sin;
  const T c = cos(angle), s = sin(angle);
  return {c * v.x + s * v.y, c * v.y - s * v.x, v.z};
}

template <class T>
Vec3T<T> rotate_pitch(const Vec3T<T>& v, const T& angle) {
  using std::cos;
  using std::sin;
  const T c = cos(angle), s = sin(angle);
  return {c * v.x - s * v.z, v.y, c * v.z + s * v.x};
}

template <class T>
Vec3T<T> rotate_roll(const Vec3T<T>& v, const T& angle) {
  using std::cos;
  using std::sin;
  const T c = cos(angle), s = sin(angle);
  return {v.x, c * v.y + s * v.z, c * v.z - s * v.y};
}

// Elevation tilt with positive angle looking down.
template <class T>
Vec3T<T> rotate_elevation(const Vec3T<T>& v, const T& angle) {
  using std::cos;
  using std::sin;
  const T c = cos(angle), s = sin(angle);
  return {c * v.x + s * v.z, v.y, c * v.z - s * v.x};
}

}  // namespace detail

template <class T>
Vec3T<T> to_camera_frame_t(const Vec3T<T>& rel_inertial, const T& heading, const T& pitch,
                           const T& roll, const T& cam_az, const T& cam_el) {
  Vec3T<T> v = detail::rotate_z(rel_inertial, heading);
  v = detail::rotate_pitch(v, pitch);
  v = detail::rotate_roll(v, roll);
  v = detail::rotate_z(v, cam_az);
  v = detail::rotate_elevation(v, cam_el);
  return v;
}

inline Eigen::Vector3d to_camera_frame(const Eigen::Vector3d& rel_inertial, double heading,
                                       double pitch, double roll, const CameraMount& mount,
                                       double gimbal_az = 0.0, double gimbal_el = 0.0) {
  const double az = mount.kind == MountKind::gimballed ? gimbal_az : mount.boresight_azimuth;
  const double el = mount.kind == MountKind::gimballed ? gimbal_el : mount.boresight_elevation;
  const Vec3 v = to_camera_frame_t<double>({rel_inertial.x(), rel_inertial.y(), rel_inertial.z()},
                                           heading, pitch, roll, az, el);
  return {v.x, v.y, v.z};
}

// Azimuth/elevation of a relative position vector, in the frame the vector
// is expressed in. Positive elevation means the object is below the axis.
template <class T>
void bearing_angles_t(const Vec3T<T>& r, T& azimuth, T& elevation) {
  using std::atan;
  using std::atan2;
  using std::sqrt;
  const T horiz = sqrt(r.x * r.x + r.y * r.y);
  azimuth = atan2(r.y, r.x);
  elevation = atan(r.z / horiz);
}

inline std::pair<double, double> bearing_angles(const Eigen::Vector3d& r) {
  const double horiz_sq = r.x() * r.x() + r.y() * r.y();
  if (horiz_sq <= 0.0) {
    if (r.norm() == 0.0) throw SingularityError("bearing_angles: zero relative position");
    throw SingularityError("bearing_angles: object on the vertical axis, azimuth undefined");
  }
  double az, el;
  bearing_angles_t<double>({r.x(), r.y(), r.z()}, az, el);
  return {az, el};
}

enum class FovSide { upper, lower };

namespace detail {

// 1/(1+e^z) evaluated on the numerically safe branch; result clamped into
// the open interval so downstream products never collapse to exactly 0 or 1.
inline double stable_inv_logit(double z) {
  double s;
  if (z >= 0.0) {
    const double t = std::exp(-z);
    s = t / (1.0 + t);
  } else {
    s = 1.0 / (1.0 + std::exp(z));
  }
  constexpr double lo = 1e-300;
  constexpr double hi = 1.0 - 1.1102230246251565e-16;  // 1 - 2^-53
  return std::clamp(s, lo, hi);
}

inline double sigmoid_of_margin(double z) { return stable_inv_logit(z); }

template <std::size_t N>
Dual<N> sigmoid_of_margin(const Dual<N>& z) {
  const double s = stable_inv_logit(z.v);
  return chain(s, -s * (1.0 - s), z);
}

}  // namespace detail

// One-sided smooth FOV indicator. Upper side is 1/(1+e^{k(angle-limit)});
// the lower side mirrors it so the value approaches 1 inside the admissible
// region on either side.
template <class T>
T sigmoid_indicator_t(const T& angle, double limit, double steepness, FovSide side) {
  const T margin = side == FovSide::upper ? T(steepness) * (angle - T(limit))
                                          : T(steepness) * (T(limit) - angle);
  return detail::sigmoid_of_margin(margin);
}

inline double sigmoid_indicator(double angle, double limit, double steepness, FovSide side) {
  if (!(steepness > 0.0)) throw DomainError("sigmoid_indicator: steepness must be > 0");
  return sigmoid_indicator_t<double>(angle, limit, steepness, side);
}

// Product of the four one-sided sigmoids; continuous and differentiable in
// both angles, value in the open interval (0, 1).
template <class T>
T fov_visibility_t(const T& azimuth, const T& elevation, const FovSpec& fov) {
  const double k = fov.steepness;
  return sigmoid_indicator_t(azimuth, fov.az_min, k, FovSide::lower) *
         sigmoid_indicator_t(azimuth, fov.az_max, k, FovSide::upper) *
         sigmoid_indicator_t(elevation, fov.el_min, k, FovSide::lower) *
         sigmoid_indicator_t(elevation, fov.el_max, k, FovSide::upper);
}

inline double fov_visibility(double azimuth, double elevation, const FovSpec& fov) {
  return fov_visibility_t<double>(azimuth, elevation, fov);
}

// Analytic gradient of fov_visibility with respect to (azimuth, elevation).
inline Eigen::Vector2d fov_visibility_grad(double azimuth, double elevation, const FovSpec& fov) {
  const Dual<2> az = Dual<2>::seed(azimuth, 0);
  const Dual<2> el = Dual<2>::seed(elevation, 1);
  const Dual<2> v = fov_visibility_t(az, el, fov);
  return {v.d[0], v.d[1]};
}

// Crisp in-frame test used by the estimators; the smooth product is the
// optimizer's surrogate for this gate.
inline bool crisp_in_fov(double azimuth, double elevation, const FovSpec& fov) {
  return azimuth >= fov.az_min && azimuth <= fov.az_max && elevation >= fov.el_min &&
         elevation <= fov.el_max;
}

// Wrap to (-pi, pi]; exact for values already in range.
inline double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace bearline
