#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bearline/errors.hpp"
#include "bearline/information.hpp"
#include "bearline/rng.hpp"
#include "bearline/trajectory.hpp"

namespace bearline {

// Cost weights w1, w2, w3 of the planning objective.
struct CostWeights {
  double w_target = 0.5;
  double w_usv = 0.5;
  double w_time = 0.5;

  void validate() const {
    if (w_target < 0.0 || w_target > 1.0) throw ValidationError("weights.target", "must be in [0,1]");
    if (w_usv < 0.0 || w_usv > 1.0) throw ValidationError("weights.usv", "must be in [0,1]");
    if (w_time < 0.0) throw ValidationError("weights.time", "must be >= 0");
  }
};

struct MissionBox {
  double x_min = -450.0;
  double x_max = 350.0;
  double y_min = -400.0;
  double y_max = 400.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

// Spatial and dynamic-feasibility limits. Roll and gimbal bounds live with
// each platform (VehicleParams / GimbalParams); this set carries the shared
// mission geometry plus the collocation defect tolerance.
struct ConstraintSet {
  Eigen::Vector2d nfz_center = Eigen::Vector2d::Zero();
  double nfz_radius = 100.0;  // m
  Eigen::Vector2d comm_center = Eigen::Vector2d::Zero();
  double comm_radius = 15.0;  // m
  MissionBox mission_box;
  double dynamics_tolerance = 1e-2;  // max ODE defect norm at nodes

  void validate() const {
    if (!(nfz_radius > 0.0)) throw ValidationError("constraints.nfz_radius", "must be > 0");
    if (!(comm_radius > 0.0)) throw ValidationError("constraints.comm_radius", "must be > 0");
    if (!(mission_box.x_min < mission_box.x_max) || !(mission_box.y_min < mission_box.y_max))
      throw ValidationError("constraints.mission_box", "degenerate box");
    if (!(dynamics_tolerance > 0.0))
      throw ValidationError("constraints.dynamics_tolerance", "must be > 0");
  }
};

struct SolverOptions {
  int degree = 30;          // Bernstein degree; ~1 s node spacing at t_f = 30 s
  double tf_min = 5.0;      // s
  double tf_max = 120.0;    // s
  double tf_init = 30.0;    // s, initial time estimate
  double constraint_tol = 1e-3;
  double optimality_tol = 1e-4;
  int max_outer = 500;
  int max_inner = 200;
  int multistart = 4;

  void validate() const {
    if (degree < 1 || degree > kMaxDegree) throw ValidationError("solver.degree", "must be in [1, 60]");
    if (!(tf_min > 0.0) || !(tf_min < tf_max)) throw ValidationError("solver.tf_min", "need 0 < tf_min < tf_max");
    if (tf_init < tf_min || tf_init > tf_max) throw ValidationError("solver.tf_init", "must lie in [tf_min, tf_max]");
    if (multistart < 1) throw ValidationError("solver.multistart", "must be >= 1");
    if (max_outer < 1 || max_inner < 1) throw ValidationError("solver.max_outer", "iteration budget must be >= 1");
  }
};

// A localized object: true position plus the cueing prior handed to both
// the planner and the estimators.
struct ObjectSpec {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  PriorSpec prior;
};

struct ResolvedStart {
  double x;
  double y;
  double heading;
  double gimbal_az;
  double gimbal_el;
};

// Full mission description. Every default is either traceable to the
// paper-style parameter tables or marked as an artifact default in the
// schema documentation.
struct Scenario {
  ObjectSpec target;
  ObjectSpec usv;
  std::vector<UavSpec> uavs;
  CostWeights weights;
  ConstraintSet constraints;
  double noise_var_az = 7.5e-6;  // rad^2
  double noise_var_el = 7.5e-6;  // rad^2
  double process_var = 0.49;     // m^2 per tick, filter-side inflation
  double camera_rate = 1.0;      // Hz
  SolverOptions solver;
  std::uint64_t seed = 0;
  int trials = 500;
  // Starts are sampled this far inside the mission box and outside the NFZ
  // so a bank-limited join maneuver cannot leave the feasible set.
  double start_margin = 100.0;

  const ObjectSpec& object(ObjectId id) const {
    return id == ObjectId::target ? target : usv;
  }

  void validate() const {
    if (uavs.empty()) throw ValidationError("uavs", "at least one UAV required");
    for (const auto& u : uavs) u.validate();
    weights.validate();
    constraints.validate();
    solver.validate();
    target.prior.validate();
    usv.prior.validate();
    if ((target.position - usv.position).norm() < 1e-9)
      throw ValidationError("usv.position", "must differ from target position");
    if (!(noise_var_az > 0.0) || !(noise_var_el > 0.0))
      throw ValidationError("noise", "variances must be > 0");
    if (!(process_var >= 0.0)) throw ValidationError("process_var", "must be >= 0");
    if (!(camera_rate > 0.0)) throw ValidationError("camera_rate", "must be > 0");
    if (trials < 1) throw ValidationError("trials", "must be >= 1");
    if (!(start_margin >= 0.0)) throw ValidationError("start_margin", "must be >= 0");
    const double sep = (constraints.nfz_center - Eigen::Vector2d(usv.position.head<2>())).norm();
    if (sep <= constraints.nfz_radius)
      throw ValidationError("usv.position", "collaborating USV lies inside the no-fly zone");
  }

  // Camera ticks 0, 1/f, ... covering [0, t_f].
  std::vector<double> camera_ticks(double t_f) const {
    std::vector<double> ticks;
    const double dt = 1.0 / camera_rate;
    for (double t = 0.0; t <= t_f + 1e-9; t += dt) ticks.push_back(std::min(t, t_f));
    return ticks;
  }

  // Deterministic start poses: pinned fields are honored, everything else is
  // drawn uniformly over the shrunk mission box outside the NFZ standoff.
  std::vector<ResolvedStart> resolve_starts() const {
    std::vector<ResolvedStart> starts(uavs.size());
    const auto& box = constraints.mission_box;
    for (std::size_t i = 0; i < uavs.size(); ++i) {
      auto rng = make_rng(seed, rng_stream::kStartPose, i);
      std::uniform_real_distribution<double> ux(box.x_min + start_margin, box.x_max - start_margin);
      std::uniform_real_distribution<double> uy(box.y_min + start_margin, box.y_max - start_margin);
      std::uniform_real_distribution<double> uh(-kPi, kPi);
      double x = 0.0, y = 0.0;
      const double keepout = constraints.nfz_radius + start_margin;
      for (int attempt = 0; attempt < 4096; ++attempt) {
        x = ux(rng);
        y = uy(rng);
        if ((Eigen::Vector2d(x, y) - constraints.nfz_center).norm() >= keepout) break;
        if (attempt == 4095)
          throw ConfigError("resolve_starts: mission box too small relative to NFZ keep-out");
      }
      const double heading = uh(rng);
      const auto& u = uavs[i];
      starts[i].x = u.start_x.value_or(x);
      starts[i].y = u.start_y.value_or(y);
      starts[i].heading = u.start_heading.value_or(heading);
      starts[i].gimbal_az = 0.0;
      if (u.gimbal) {
        starts[i].gimbal_el = 0.5 * (u.gimbal->el_min + u.gimbal->el_max);
      } else {
        starts[i].gimbal_el = 0.0;
      }
    }
    return starts;
  }
};

}  // namespace bearline
