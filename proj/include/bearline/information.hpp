#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "bearline/errors.hpp"
#include "bearline/trajectory.hpp"

namespace bearline {

enum class ObjectId { target, collaborating_usv };

inline const char* to_string(ObjectId id) {
  return id == ObjectId::target ? "target" : "usv";
}

// Cueing prior over an object's (x, y) position.
struct PriorSpec {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = 100.0 * Eigen::Matrix2d::Identity();

  void validate() const {
    if ((covariance - covariance.transpose()).norm() > 1e-9)
      throw ValidationError("prior.covariance", "must be symmetric");
    const double det = covariance.determinant();
    if (!(det > 0.0) || !(covariance(0, 0) > 0.0))
      throw ValidationError("prior.covariance", "must be positive definite");
  }
};

// Accumulated 2x2 Fisher information for one estimated object, with the
// prior contribution tracked separately so fusion accounting stays visible.
struct InformationAccount {
  ObjectId object_id = ObjectId::target;
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d prior_info = Eigen::Matrix2d::Zero();
  int measurement_count = 0;
  int skipped_count = 0;  // nodes dropped for singular geometry
};

namespace detail {

inline Eigen::Matrix2d symmetrize(const Eigen::Matrix2d& m) {
  return 0.5 * (m + m.transpose());
}

inline Eigen::Matrix2d invert_2x2_spd(const Eigen::Matrix2d& m, const char* what,
                                      bool relative_guard = false) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  // Information matrices carry an absolute floor (units 1/m^4); covariances
  // may be legitimately tiny, so their guard scales with trace^2.
  const double tr = m(0, 0) + m(1, 1);
  const double floor = relative_guard ? 1e-12 * 0.25 * tr * tr : 1e-15;
  if (!(det > floor)) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(symmetrize(m));
    const Eigen::Vector2d dir = es.eigenvectors().col(0);
    throw SingularityError(std::string(what) + ": information matrix not invertible; " +
                           "unobservable direction (" + std::to_string(dir.x()) + ", " +
                           std::to_string(dir.y()) + ")");
  }
  Eigen::Matrix2d inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / det;
}

inline constexpr double kSingularHorizontalDistance = 0.1;  // m

}  // namespace detail

// d[azimuth, elevation]/d[x_obj, y_obj] for inertial relative position
// rel = object - observer, reduced to 2x2 because altitude is known.
inline Eigen::Matrix2d measurement_jacobian(const Eigen::Vector3d& rel) {
  const double rho_sq = rel.x() * rel.x() + rel.y() * rel.y();
  const double rho = std::sqrt(rho_sq);
  if (rho < detail::kSingularHorizontalDistance)
    throw SingularityError("measurement_jacobian: object on the observer's vertical axis");
  const double r_sq = rho_sq + rel.z() * rel.z();
  Eigen::Matrix2d jac;
  jac(0, 0) = -rel.y() / rho_sq;
  jac(0, 1) = rel.x() / rho_sq;
  jac(1, 0) = -rel.x() * rel.z() / (r_sq * rho);
  jac(1, 1) = -rel.y() * rel.z() / (r_sq * rho);
  return jac;
}

// One visibility-weighted measurement term: v * J^T R^-1 J.
inline Eigen::Matrix2d fim_increment(const Eigen::Vector3d& rel, double visibility,
                                     double noise_var_az, double noise_var_el) {
  if (!(noise_var_az > 0.0) || !(noise_var_el > 0.0))
    throw DomainError("fim_increment: noise variances must be > 0");
  if (visibility == 0.0) return Eigen::Matrix2d::Zero();
  const Eigen::Matrix2d jac = measurement_jacobian(rel);
  const Eigen::Vector2d r_inv(1.0 / noise_var_az, 1.0 / noise_var_el);
  return visibility * (jac.transpose() * r_inv.asDiagonal() * jac);
}

// Uniform prior split: each UAV carries (1/n) P0^-1 so the shares sum to the
// full prior information exactly once.
inline std::vector<Eigen::Matrix2d> split_prior(const PriorSpec& prior, int n_uav) {
  if (n_uav < 1) throw DomainError("split_prior: n_uav must be >= 1");
  const Eigen::Matrix2d p0_inv = detail::invert_2x2_spd(prior.covariance, "split_prior", true);
  std::vector<Eigen::Matrix2d> shares(n_uav, p0_inv / static_cast<double>(n_uav));
  return shares;
}

enum class VisibilityModel { smooth, crisp };

// Fused FIM over all UAVs and sample times:
//   sum_i [ lambda_i P0^-1 + sum_k v_ik J^T R^-1 J ].
// Singular-geometry nodes contribute nothing and are counted, not fatal.
inline InformationAccount accumulate_fim(const std::vector<PlatformTrajectory>& trajectories,
                                         ObjectId object_id, const Eigen::Vector3d& object_pos,
                                         const PriorSpec& prior,
                                         const std::vector<double>& sample_times,
                                         double noise_var_az, double noise_var_el,
                                         VisibilityModel model = VisibilityModel::smooth,
                                         std::vector<std::string>* diagnostics = nullptr) {
  if (trajectories.empty()) throw ConfigError("accumulate_fim: no trajectories");
  for (const auto& traj : trajectories)
    for (double t : sample_times)
      if (t < 0.0 || t > traj.final_time() + 1e-9)
        throw ConfigError("accumulate_fim: sample time outside trajectory span");

  InformationAccount account;
  account.object_id = object_id;
  account.prior_info = detail::invert_2x2_spd(prior.covariance, "accumulate_fim", true);
  Eigen::Matrix2d total = account.prior_info;  // shares sum to one full prior

  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& traj = trajectories[i];
    for (double t : sample_times) {
      const double t_clamped = std::min(t, traj.final_time());
      const UavState st = traj.state_at(t_clamped);
      const Eigen::Vector3d rel = relative_position(st.position(), object_pos);
      const double rho = std::hypot(rel.x(), rel.y());
      if (rho < detail::kSingularHorizontalDistance) {
        ++account.skipped_count;
        if (diagnostics)
          diagnostics->push_back("uav " + std::to_string(i) + " t=" + std::to_string(t) +
                                 ": object within 0.1 m of vertical axis, node skipped");
        continue;
      }
      const auto [cam_az, cam_el] = traj.camera_bearings(t_clamped, object_pos);
      double visibility;
      if (model == VisibilityModel::smooth) {
        visibility = fov_visibility(cam_az, cam_el, traj.spec.fov);
      } else {
        visibility = crisp_in_fov(cam_az, cam_el, traj.spec.fov) ? 1.0 : 0.0;
      }
      if (visibility > 0.0) {
        total += fim_increment(rel, visibility, noise_var_az, noise_var_el);
        ++account.measurement_count;
      }
    }
  }
  account.info = detail::symmetrize(total);
  return account;
}

struct PcrlbTrace {
  double trace;       // m^2
  double root_trace;  // m
};

// Tr(FIM^-1) and its square root, the scalar accuracy bound in meters.
inline PcrlbTrace pcrlb_trace(const InformationAccount& account) {
  const Eigen::Matrix2d inv = detail::invert_2x2_spd(account.info, "pcrlb_trace");
  const double tr = inv.trace();
  return {tr, std::sqrt(tr)};
}

}  // namespace bearline
