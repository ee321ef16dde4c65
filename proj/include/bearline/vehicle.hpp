#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <vector>

#include "bearline/bernstein.hpp"
#include "bearline/errors.hpp"

namespace bearline {

inline constexpr double kPi = 3.14159265358979323846;

// Bank-to-turn airframe parameters. Altitude is a parameter, not a state:
// the NED z coordinate of the vehicle is -altitude for the whole mission.
struct VehicleParams {
  double airspeed = 25.0;       // m/s
  double gravity = 9.81;        // m/s^2
  double roll_min = -kPi / 4;   // rad
  double roll_max = kPi / 4;    // rad
  double altitude = 50.0;       // m above the surface

  void validate() const {
    if (!(airspeed > 0.0)) throw ValidationError("airspeed", "must be > 0");
    if (!(roll_min < roll_max)) throw ValidationError("roll_min", "must be < roll_max");
    if (!(std::abs(roll_min) < kPi / 2) || !(std::abs(roll_max) < kPi / 2))
      throw ValidationError("roll_max", "|roll| bounds must be < pi/2");
    if (!(gravity > 0.0)) throw ValidationError("gravity", "must be > 0");
  }
};

struct GimbalParams {
  double az_min = -kPi / 2;
  double az_max = kPi / 2;
  double el_min = 0.0;
  double el_max = kPi / 2;
  double az_rate_min = -5.24;  // rad/s
  double az_rate_max = 5.24;
  double el_rate_min = -5.24;
  double el_rate_max = 5.24;

  void validate() const {
    if (!(az_min < az_max)) throw ValidationError("gimbal.az_min", "must be < az_max");
    if (!(el_min < el_max)) throw ValidationError("gimbal.el_min", "must be < el_max");
    if (!(az_rate_min < az_rate_max))
      throw ValidationError("gimbal.az_rate_min", "must be < az_rate_max");
    if (!(el_rate_min < el_rate_max))
      throw ValidationError("gimbal.el_rate_min", "must be < el_rate_max");
  }
};

// Heading is kept unwrapped on the real line; wrap only for display.
struct UavState {
  double x = 0.0;        // m north
  double y = 0.0;        // m east
  double z = 0.0;        // m down (constant, -altitude)
  double heading = 0.0;  // rad
  std::optional<double> gimbal_az;
  std::optional<double> gimbal_el;

  Eigen::Vector3d position() const { return {x, y, z}; }
};

struct ControlInput {
  double roll = 0.0;  // rad
  std::optional<double> az_rate;
  std::optional<double> el_rate;
};

// State-curve row layout shared by the collocation machinery.
namespace state_row {
inline constexpr int kX = 0;
inline constexpr int kY = 1;
inline constexpr int kZ = 2;
inline constexpr int kHeading = 3;
inline constexpr int kGimbalAz = 4;
inline constexpr int kGimbalEl = 5;
}  // namespace state_row

namespace control_row {
inline constexpr int kRoll = 0;
inline constexpr int kGimbalAzRate = 1;
inline constexpr int kGimbalElRate = 2;
}  // namespace control_row

inline int state_dimension(bool gimballed) { return gimballed ? 6 : 4; }
inline int control_dimension(bool gimballed) { return gimballed ? 3 : 1; }

// Eq. of motion right-hand side: xdot = V cos(psi), ydot = V sin(psi),
// zdot = 0, psidot = (g/V) tan(roll); gimbal angles are single integrators.
inline UavState btt_derivative(const UavState& state, const ControlInput& control,
                               const VehicleParams& params) {
  if (std::abs(control.roll) >= kPi / 2)
    throw SingularityError("roll at +-pi/2: turn rate undefined");
  UavState d;
  d.x = params.airspeed * std::cos(state.heading);
  d.y = params.airspeed * std::sin(state.heading);
  d.z = 0.0;
  d.heading = params.gravity / params.airspeed * std::tan(control.roll);
  if (state.gimbal_az) d.gimbal_az = control.az_rate.value_or(0.0);
  if (state.gimbal_el) d.gimbal_el = control.el_rate.value_or(0.0);
  return d;
}

// Radius of the coordinated turn flown at constant roll: V^2 / (g tan(roll)).
inline double turn_radius(const VehicleParams& params, double roll) {
  const double t = std::tan(std::abs(roll));
  if (t <= 0.0) throw DomainError("turn_radius: roll must be nonzero");
  return params.airspeed * params.airspeed / (params.gravity * t);
}

// ODE defect at the n+1 shared nodes: (state-derivative curve at t_j) minus
// f(state(t_j), control(t_j)). One column per node.
inline Eigen::MatrixXd dynamics_residuals(const BernsteinCurve& state_curve,
                                          const BernsteinCurve& control_curve,
                                          const VehicleParams& params) {
  if (std::abs(state_curve.final_time() - control_curve.final_time()) > 1e-12)
    throw ConfigError("state and control curves must share final_time");
  if (state_curve.degree() != control_curve.degree())
    throw ConfigError("state and control curves must share degree");
  const int dim = state_curve.dimension();
  const bool gimballed = dim == 6;
  if (dim != 4 && dim != 6) throw ConfigError("state curve dimension must be 4 or 6");
  if (control_curve.dimension() != control_dimension(gimballed))
    throw ConfigError("control curve dimension inconsistent with state curve");

  const BernsteinCurve deriv = state_curve.derivative();
  const auto nodes = state_curve.nodes();
  Eigen::MatrixXd res(dim, static_cast<int>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const Eigen::VectorXd s = state_curve.eval(nodes[j]);
    const Eigen::VectorXd u = control_curve.eval(nodes[j]);
    const Eigen::VectorXd ds = deriv.eval(nodes[j]);
    res(state_row::kX, j) = ds(state_row::kX) - params.airspeed * std::cos(s(state_row::kHeading));
    res(state_row::kY, j) = ds(state_row::kY) - params.airspeed * std::sin(s(state_row::kHeading));
    res(state_row::kZ, j) = ds(state_row::kZ);
    res(state_row::kHeading, j) =
        ds(state_row::kHeading) -
        params.gravity / params.airspeed * std::tan(u(control_row::kRoll));
    if (gimballed) {
      res(state_row::kGimbalAz, j) = ds(state_row::kGimbalAz) - u(control_row::kGimbalAzRate);
      res(state_row::kGimbalEl, j) = ds(state_row::kGimbalEl) - u(control_row::kGimbalElRate);
    }
  }
  return res;
}

}  // namespace bearline
