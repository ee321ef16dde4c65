#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "bearline/errors.hpp"
#include "bearline/information.hpp"
#include "bearline/sensor.hpp"

namespace bearline {

// One UAV's local filter over one object's (x, y). The stationary process
// model keeps the mean fixed; process noise inflates the covariance.
struct LocalFilterState {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  ObjectId object_id = ObjectId::target;
  int uav_id = 0;
  int step = 0;
};

struct FusedEstimate {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  std::vector<int> contributors;
};

inline LocalFilterState ekf_predict(const LocalFilterState& state, double process_var) {
  LocalFilterState next = state;
  next.covariance += process_var * Eigen::Matrix2d::Identity();
  next.step += 1;
  return next;
}

// Standard EKF measurement update with the bearing Jacobian linearized at
// the current mean; azimuth innovation wrapped to (-pi, pi]. Returns the
// input unchanged (flag false) when the innovation covariance is singular.
inline std::pair<LocalFilterState, bool> ekf_update(const LocalFilterState& state,
                                                    const BearingObservation& obs,
                                                    double object_z) {
  const Eigen::Vector3d observer = obs.observer_state.position();
  const Eigen::Vector3d rel(state.mean.x() - observer.x(), state.mean.y() - observer.y(),
                            object_z - observer.z());
  const double rho_sq = rel.x() * rel.x() + rel.y() * rel.y();
  if (rho_sq < 0.01) return {state, false};  // singular linearization geometry

  const auto [pred_az, pred_el] = bearing_angles(rel);
  Eigen::Vector2d innovation(wrap_angle(obs.azimuth - pred_az), obs.elevation - pred_el);
  const Eigen::Matrix2d h = measurement_jacobian(rel);
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = obs.noise_var_az;
  r(1, 1) = obs.noise_var_el;

  const Eigen::Matrix2d s = h * state.covariance * h.transpose() + r;
  const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  if (!(det > 1e-30) || !std::isfinite(det)) return {state, false};
  Eigen::Matrix2d s_inv;
  s_inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
  s_inv /= det;

  const Eigen::Matrix2d gain = state.covariance * h.transpose() * s_inv;
  LocalFilterState next = state;
  next.mean += gain * innovation;
  const Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity() - gain * h;
  const Eigen::Matrix2d p = ikh * state.covariance;
  next.covariance = 0.5 * (p + p.transpose());
  return {next, true};
}

// Noisy inertial-frame bearings gated by the crisp camera-frame FOV test on
// the true geometry. Absent when the object is out of frame or the bearing
// is singular.
inline std::optional<BearingObservation> synthesize_measurement(
    const Eigen::Vector3d& true_object, const UavState& uav_state, double roll,
    const CameraMount& mount, const FovSpec& fov, double noise_std_az, double noise_std_el,
    std::mt19937_64& rng, double time = 0.0) {
  const Eigen::Vector3d rel = relative_position(uav_state.position(), true_object);
  const double rho_sq = rel.x() * rel.x() + rel.y() * rel.y();
  if (rho_sq < 0.01) return std::nullopt;

  const Eigen::Vector3d cam =
      to_camera_frame(rel, uav_state.heading, 0.0, roll, mount, uav_state.gimbal_az.value_or(0.0),
                      uav_state.gimbal_el.value_or(0.0));
  const auto [cam_az, cam_el] = bearing_angles(cam);
  if (!crisp_in_fov(cam_az, cam_el, fov)) return std::nullopt;

  const auto [true_az, true_el] = bearing_angles(rel);
  std::normal_distribution<double> gauss(0.0, 1.0);
  BearingObservation obs;
  obs.azimuth = wrap_angle(true_az + noise_std_az * gauss(rng));
  obs.elevation = true_el + noise_std_el * gauss(rng);
  obs.time = time;
  obs.observer_state = uav_state;
  obs.visibility = fov_visibility(cam_az, cam_el, fov);
  obs.noise_var_az = noise_std_az * noise_std_az;
  obs.noise_var_el = noise_std_el * noise_std_el;
  return obs;
}

// Information-weighted terminal fusion:
//   P_f = (sum P_i^-1)^-1,  x_f = P_f sum P_i^-1 x_i.
// Contributors with singular covariance are excluded, not fatal.
inline FusedEstimate fuse_federated(const std::vector<LocalFilterState>& locals,
                                    std::vector<std::string>* diagnostics = nullptr) {
  if (locals.empty()) throw ConfigError("fuse_federated: no local estimates");
  Eigen::Matrix2d info_sum = Eigen::Matrix2d::Zero();
  Eigen::Vector2d weighted_sum = Eigen::Vector2d::Zero();
  FusedEstimate fused;
  for (const auto& local : locals) {
    const Eigen::Matrix2d& p = local.covariance;
    const double det = p(0, 0) * p(1, 1) - p(0, 1) * p(1, 0);
    if (!(det > 1e-30) || !std::isfinite(det)) {
      if (diagnostics)
        diagnostics->push_back("uav " + std::to_string(local.uav_id) +
                               ": singular covariance excluded from fusion");
      continue;
    }
    Eigen::Matrix2d p_inv;
    p_inv << p(1, 1), -p(0, 1), -p(1, 0), p(0, 0);
    p_inv /= det;
    info_sum += p_inv;
    weighted_sum += p_inv * local.mean;
    fused.contributors.push_back(local.uav_id);
  }
  if (fused.contributors.empty())
    throw SingularityError("fuse_federated: all contributors singular");
  const double det = info_sum(0, 0) * info_sum(1, 1) - info_sum(0, 1) * info_sum(1, 0);
  Eigen::Matrix2d cov;
  cov << info_sum(1, 1), -info_sum(0, 1), -info_sum(1, 0), info_sum(0, 0);
  cov /= det;
  fused.covariance = 0.5 * (cov + cov.transpose());
  fused.mean = fused.covariance * weighted_sum;
  return fused;
}

}  // namespace bearline
