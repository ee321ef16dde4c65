#pragma once

#include <optional>
#include <utility>

#include "bearline/bernstein.hpp"
#include "bearline/sensor.hpp"
#include "bearline/vehicle.hpp"

namespace bearline {

// Static description of one UAV platform: airframe, camera, field of view.
struct UavSpec {
  VehicleParams params;
  CameraMount mount;
  FovSpec fov;
  std::optional<GimbalParams> gimbal;
  // Start pose at retasking; filled from the scenario seed when not pinned.
  std::optional<double> start_x;
  std::optional<double> start_y;
  std::optional<double> start_heading;

  bool gimballed() const { return mount.kind == MountKind::gimballed; }

  void validate() const {
    params.validate();
    fov.validate();
    if (gimballed()) {
      if (!gimbal) throw ValidationError("uav.gimbal", "gimballed mount requires gimbal limits");
      gimbal->validate();
    }
  }
};

// One UAV's planned motion: a state curve (x, y, z, heading[, gimbal az/el])
// and a control curve (roll[, gimbal rates]) on a shared node grid.
struct PlatformTrajectory {
  BernsteinCurve state_curve;
  BernsteinCurve control_curve;
  UavSpec spec;

  double final_time() const { return state_curve.final_time(); }

  UavState state_at(double t) const {
    const Eigen::VectorXd s = state_curve.eval(t);
    UavState st;
    st.x = s(state_row::kX);
    st.y = s(state_row::kY);
    st.z = s(state_row::kZ);
    st.heading = s(state_row::kHeading);
    if (s.size() >= 6) {
      st.gimbal_az = s(state_row::kGimbalAz);
      st.gimbal_el = s(state_row::kGimbalEl);
    }
    return st;
  }

  ControlInput control_at(double t) const {
    const Eigen::VectorXd u = control_curve.eval(t);
    ControlInput c;
    c.roll = u(control_row::kRoll);
    if (u.size() >= 3) {
      c.az_rate = u(control_row::kGimbalAzRate);
      c.el_rate = u(control_row::kGimbalElRate);
    }
    return c;
  }

  // Camera-frame bearings of an inertial point, given the pose and roll at t.
  std::pair<double, double> camera_bearings(double t, const Eigen::Vector3d& object) const {
    const UavState st = state_at(t);
    const ControlInput u = control_at(t);
    const Eigen::Vector3d rel = relative_position(st.position(), object);
    const Eigen::Vector3d cam =
        to_camera_frame(rel, st.heading, 0.0, u.roll, spec.mount, st.gimbal_az.value_or(0.0),
                        st.gimbal_el.value_or(0.0));
    return bearing_angles(cam);
  }
};

}  // namespace bearline
