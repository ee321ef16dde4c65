#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "bearline/rng.hpp"
#include "bearline/scenario.hpp"
#include "bearline/solver.hpp"
#include "bearline/trajectory_nlp.hpp"

namespace bearline {

enum class SeedStrategy { racetrack_seed, loiter_seed, random_multistart };

namespace planner_detail {

struct SimSample {
  double t, x, y, heading, roll;
};

// Forward integration of the bank-to-turn model under a roll program driven
// by a heading controller with curvature feedforward: the roll command is
// slew-limited so the resulting path is smooth enough to fit at degree ~30.
class HeadingSim {
 public:
  HeadingSim(const VehicleParams& params, double x0, double y0, double psi0)
      : params_(params) {
    state_ = {0.0, x0, y0, psi0, 0.0};
    samples_.push_back(state_);
  }

  const SimSample& state() const { return state_; }
  const std::vector<SimSample>& samples() const { return samples_; }

  // Advance one step toward the desired heading. `ff_roll` carries the
  // path-curvature feedforward so tracking converges with zero heading lag.
  void step(double desired_heading, double ff_roll = 0.0, double roll_limit_frac = 0.88) {
    const double lim = roll_limit_frac * params_.roll_max;
    const double err = wrap_angle(desired_heading - state_.heading);
    const double cmd = std::clamp(ff_roll + 1.6 * err, -lim, lim);
    const double slew = 0.5;  // rad/s; gentle ramps keep the path fittable
    double roll_next = state_.roll + std::clamp(cmd - state_.roll, -slew * dt_, slew * dt_);

    // RK4 on (x, y, psi) with roll linear across the step.
    auto rate = [&](double frac) {
      const double r = state_.roll + frac * (roll_next - state_.roll);
      return params_.gravity / params_.airspeed * std::tan(r);
    };
    auto deriv = [&](double psi, double frac, double& dx, double& dy, double& dpsi) {
      dx = params_.airspeed * std::cos(psi);
      dy = params_.airspeed * std::sin(psi);
      dpsi = rate(frac);
    };
    double k1x, k1y, k1p, k2x, k2y, k2p, k3x, k3y, k3p, k4x, k4y, k4p;
    deriv(state_.heading, 0.0, k1x, k1y, k1p);
    deriv(state_.heading + 0.5 * dt_ * k1p, 0.5, k2x, k2y, k2p);
    deriv(state_.heading + 0.5 * dt_ * k2p, 0.5, k3x, k3y, k3p);
    deriv(state_.heading + dt_ * k3p, 1.0, k4x, k4y, k4p);
    state_.x += dt_ / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    state_.y += dt_ / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    state_.heading += dt_ / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    state_.roll = roll_next;
    state_.t += dt_;
    samples_.push_back(state_);
  }

  double dt() const { return dt_; }

 private:
  VehicleParams params_;
  SimSample state_;
  std::vector<SimSample> samples_;
  double dt_ = 0.01;
};

// Stadium loop around the keep-out disc: two straights and two semicircle
// caps of radius `rho`, long axis along `axis_unit`, traversed clockwise
// (viewed from above) so a right-mounted camera keeps the center on its
// right; `clockwise=false` mirrors the traversal.
struct PathPoint {
  Eigen::Vector2d pos;
  double heading;    // tangent direction of travel
  bool on_cap;       // true on the semicircle segments
};

struct Stadium {
  Eigen::Vector2d center;
  Eigen::Vector2d axis;  // unit
  double half_len;
  double rho;

  double perimeter() const { return 4.0 * half_len + 2.0 * kPi * rho; }

  PathPoint point_cw(double s) const {
    const double len = 2.0 * half_len;
    const double cap = kPi * rho;
    const Eigen::Vector2d v(-axis.y(), axis.x());  // compass +90 deg from axis
    s = std::fmod(s, perimeter());
    if (s < 0) s += perimeter();
    PathPoint p;
    if (s < len) {  // offset-side straight, travelling against the axis
      p.pos = center + (half_len - s) * axis + rho * v;
      p.heading = std::atan2(-axis.y(), -axis.x());
      p.on_cap = false;
    } else if (s < len + cap) {  // far cap
      const double th = (s - len) / rho;
      p.pos = center - half_len * axis + rho * (std::cos(th) * v - std::sin(th) * axis);
      const Eigen::Vector2d tang = -std::sin(th) * v - std::cos(th) * axis;
      p.heading = std::atan2(tang.y(), tang.x());
      p.on_cap = true;
    } else if (s < 2 * len + cap) {  // return straight, along the axis
      const double d = s - len - cap;
      p.pos = center + (-half_len + d) * axis - rho * v;
      p.heading = std::atan2(axis.y(), axis.x());
      p.on_cap = false;
    } else {  // near cap
      const double th = (s - 2 * len - cap) / rho;
      p.pos = center + half_len * axis + rho * (-std::cos(th) * v + std::sin(th) * axis);
      const Eigen::Vector2d tang = std::sin(th) * v + std::cos(th) * axis;
      p.heading = std::atan2(tang.y(), tang.x());
      p.on_cap = true;
    }
    return p;
  }

  PathPoint point(double s, bool clockwise) const {
    if (clockwise) return point_cw(s);
    PathPoint p = point_cw(perimeter() - std::fmod(s, perimeter()));
    p.heading = wrap_angle(p.heading + kPi);
    return p;
  }

  double nearest_arclength(const Eigen::Vector2d& p, bool clockwise) const {
    double best_s = 0.0, best_d = std::numeric_limits<double>::infinity();
    const int steps = 720;
    for (int i = 0; i < steps; ++i) {
      const double s = perimeter() * i / steps;
      const double d = (point(s, clockwise).pos - p).norm();
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
    return best_s;
  }

  // Local refinement of the nearest arclength around a previous estimate.
  double track_arclength(const Eigen::Vector2d& p, bool clockwise, double s_prev) const {
    double best_s = s_prev, best_d = std::numeric_limits<double>::infinity();
    for (double ds = -2.0; ds <= 8.0; ds += 0.25) {
      const double s = s_prev + ds;
      const double d = (point(s, clockwise).pos - p).norm();
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
    return best_s;
  }
};

inline double segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const Eigen::Vector2d& p) {
  const Eigen::Vector2d ab = b - a;
  const double len_sq = ab.squaredNorm();
  const double t = len_sq > 0 ? std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

// Least-squares Bernstein fit with both endpoint columns pinned exactly.
// The Bernstein normal equations are exponentially ill-conditioned at high
// degree, so a second-difference penalty keeps the control polygon tame
// when the data is not exactly polynomial.
inline Eigen::MatrixXd fit_bernstein(const std::vector<double>& times,
                                     const Eigen::MatrixXd& values, int n, double t_f,
                                     double smooth_weight = 1e-6) {
  const int rows = static_cast<int>(values.rows());
  const int k = static_cast<int>(times.size());
  Eigen::MatrixXd a(k, n + 1);
  for (int i = 0; i < k; ++i) a.row(i) = bernstein_basis_row(n, std::min(times[i] / t_f, 1.0));

  const int n_smooth = std::max(0, n - 1);
  const double lambda = smooth_weight * std::sqrt(static_cast<double>(k));
  Eigen::MatrixXd stacked(k + n_smooth, n + 1);
  stacked.topRows(k) = a;
  stacked.bottomRows(n_smooth).setZero();
  for (int r = 0; r < n_smooth; ++r) {
    stacked(k + r, r) = lambda;
    stacked(k + r, r + 1) = -2.0 * lambda;
    stacked(k + r, r + 2) = lambda;
  }

  // Pin first/last control point to the first/last sample.
  Eigen::MatrixXd a_mid = stacked.middleCols(1, n - 1);
  Eigen::MatrixXd rhs(k + n_smooth, rows);
  rhs.topRows(k) = values.transpose();
  rhs.bottomRows(n_smooth).setZero();
  rhs -= stacked.col(0) * values.col(0).transpose();
  rhs -= stacked.col(n) * values.col(k - 1).transpose();
  Eigen::MatrixXd mid = a_mid.colPivHouseholderQr().solve(rhs);  // (n-1) x rows
  Eigen::MatrixXd points(rows, n + 1);
  points.col(0) = values.col(0);
  points.col(n) = values.col(k - 1);
  points.middleCols(1, n - 1) = mid.transpose();
  return points;
}

// Decision block for one UAV from a simulated path, built so the collocation
// defects are small by construction: fit the heading curve, derive the roll
// from its exact derivative, and integrate the fitted planar velocity in
// closed form (the Bernstein antiderivative is exact). The defect at every
// node then equals a one-dimensional least-squares residual of a smooth
// signal instead of a coupled position-fit error. Gimbal rows (if any) hold
// their start values with zero rates.
inline void fill_uav_from_samples(DecisionVector& d, int uav, const Scenario& scenario,
                                  const std::vector<SimSample>& samples, double t_f,
                                  const ResolvedStart& start) {
  const int n = scenario.solver.degree;
  const bool gimballed = scenario.uavs[uav].gimballed();
  const auto& vp = scenario.uavs[uav].params;
  const int stride = 5;  // fit on every 5th sim sample
  std::vector<double> times;
  const int count = static_cast<int>(samples.size());
  for (int i = 0; i < count; i += stride) times.push_back(samples[i].t);
  if ((count - 1) % stride != 0) times.push_back(samples.back().t);
  const int k = static_cast<int>(times.size());
  Eigen::MatrixXd heading_samples(1, k);
  for (int i = 0; i < k; ++i) {
    const int src = std::min((i == k - 1) ? count - 1 : i * stride, count - 1);
    heading_samples(0, i) = samples[src].heading;
  }
  const Eigen::RowVectorXd psi = fit_bernstein(times, heading_samples, n, t_f, 1e-6).row(0);

  // Dense evaluation grid in normalized time for the secondary fits.
  const int dense = 12 * n;
  std::vector<double> grid(dense + 1);
  Eigen::MatrixXd psi_rate(1, dense + 1), vx(1, dense + 1), vy(1, dense + 1);
  for (int g = 0; g <= dense; ++g) {
    const double tau = static_cast<double>(g) / dense;
    grid[g] = tau * t_f;
    const Eigen::RowVectorXd b_n = bernstein_basis_row(n, tau);
    const Eigen::RowVectorXd b_n1 = bernstein_basis_row(n - 1, tau);
    double rate = 0.0;
    for (int j = 0; j < n; ++j) rate += (n / t_f) * (psi(j + 1) - psi(j)) * b_n1(j);
    double heading = b_n.dot(psi);
    psi_rate(0, g) = rate;
    vx(0, g) = vp.airspeed * std::cos(heading);
    vy(0, g) = vp.airspeed * std::sin(heading);
  }

  // Roll from the heading-rate curve; velocity coefficients at degree n-1,
  // integrated exactly into position control points.
  Eigen::MatrixXd roll_samples(1, dense + 1);
  for (int g = 0; g <= dense; ++g)
    roll_samples(0, g) = std::atan(vp.airspeed * psi_rate(0, g) / vp.gravity);
  const Eigen::RowVectorXd roll = fit_bernstein(grid, roll_samples, n, t_f, 1e-6).row(0);
  const Eigen::RowVectorXd cx = fit_bernstein(grid, vx, n - 1, t_f, 3e-4).row(0);
  const Eigen::RowVectorXd cy = fit_bernstein(grid, vy, n - 1, t_f, 3e-4).row(0);

  auto& s = d.state_points[uav];
  auto& u = d.control_points[uav];
  s(state_row::kX, 0) = samples.front().x;
  s(state_row::kY, 0) = samples.front().y;
  for (int j = 0; j < n; ++j) {
    s(state_row::kX, j + 1) = s(state_row::kX, j) + (t_f / n) * cx(j);
    s(state_row::kY, j + 1) = s(state_row::kY, j) + (t_f / n) * cy(j);
  }
  s.row(state_row::kHeading) = psi;
  s.row(state_row::kZ).setConstant(-vp.altitude);
  u.row(control_row::kRoll) = roll.cwiseMax(vp.roll_min + 1e-3).cwiseMin(vp.roll_max - 1e-3);
  if (gimballed) {
    s.row(state_row::kGimbalAz).setConstant(start.gimbal_az);
    s.row(state_row::kGimbalEl).setConstant(start.gimbal_el);
    u.row(control_row::kGimbalAzRate).setZero();
    u.row(control_row::kGimbalElRate).setZero();
  }
}

struct RacetrackSim {
  std::vector<SimSample> samples;
  double duration;
};

// Tangent point from an external position onto the circle (center, rho) for
// the given traversal sense; falls back to the radial point when inside.
inline Eigen::Vector2d tangent_point(const Eigen::Vector2d& p, const Eigen::Vector2d& center,
                                     double rho, bool clockwise) {
  const Eigen::Vector2d w = p - center;
  const double d = w.norm();
  if (d <= rho * 1.001) return center + rho * w.normalized();
  const double beta = std::acos(rho / d);
  const double base = std::atan2(w.y(), w.x());
  Eigen::Vector2d best;
  double best_score = -2.0;
  for (double sign : {1.0, -1.0}) {
    const double ang = base + sign * beta;
    const Eigen::Vector2d t = center + rho * Eigen::Vector2d(std::cos(ang), std::sin(ang));
    // Clockwise traversal: tangent direction at angle a is a + pi/2.
    const double tang = clockwise ? ang + kPi / 2 : ang - kPi / 2;
    const Eigen::Vector2d tang_dir(std::cos(tang), std::sin(tang));
    const double score = tang_dir.dot((t - p).normalized());
    if (score > best_score) {
      best_score = score;
      best = t;
    }
  }
  return best;
}

// Heuristic baseline: approach along a tangent of the standoff circle, fly
// one full stadium lap with curvature feedforward, then beeline to the
// communication circle once the exit line clears the NFZ.
inline RacetrackSim simulate_racetrack(const Scenario& scenario, const ResolvedStart& start,
                                       int uav = 0) {
  const auto& cs = scenario.constraints;
  const Eigen::Vector2d target = cs.nfz_center;
  const Eigen::Vector2d usv = cs.comm_center;
  if ((target - usv).norm() <= cs.nfz_radius + cs.comm_radius)
    throw ConfigError("heuristic_racetrack: communication circle intersects the no-fly zone");

  const auto& spec = scenario.uavs[uav];
  const double margin = 20.0;
  Stadium stadium;
  stadium.center = target;
  stadium.rho = cs.nfz_radius + margin;
  Eigen::Vector2d axis = usv - target;
  stadium.axis = axis.norm() > 1e-9 ? Eigen::Vector2d(axis.normalized()) : Eigen::Vector2d(1, 0);
  stadium.half_len = 0.35 * stadium.rho;
  const bool clockwise = spec.mount.boresight_azimuth >= 0.0;

  const auto& vp = spec.params;
  const double cap_roll =
      (clockwise ? 1.0 : -1.0) * std::atan(vp.airspeed * vp.airspeed / (vp.gravity * stadium.rho));

  HeadingSim sim(vp, start.x, start.y, start.heading);
  const double v_dt = vp.airspeed * sim.dt();
  const double perimeter = stadium.perimeter();

  enum Phase { escape, join, lap, exit_leg } phase = escape;
  if ((Eigen::Vector2d(start.x, start.y) - target).norm() >= stadium.rho + 20.0) phase = join;

  double s_track = 0.0, progress = 0.0;

  while (sim.state().t < 150.0) {
    const auto& st = sim.state();
    const Eigen::Vector2d pos(st.x, st.y);
    double desired = st.heading;
    double ff_roll = 0.0;
    switch (phase) {
      case escape: {
        const Eigen::Vector2d radial = pos - target;
        desired = std::atan2(radial.y(), radial.x());
        if (radial.norm() >= stadium.rho + 20.0) phase = join;
        break;
      }
      case join: {
        const Eigen::Vector2d tp = tangent_point(pos, target, stadium.rho, clockwise);
        desired = std::atan2((tp - pos).y(), (tp - pos).x());
        if ((tp - pos).norm() < 30.0 && std::abs(wrap_angle(st.heading - desired)) < 0.3) {
          phase = lap;
          s_track = stadium.nearest_arclength(pos, clockwise);
          progress = 0.0;
        }
        break;
      }
      case lap: {
        const double s_new = stadium.track_arclength(pos, clockwise, s_track + v_dt);
        progress += std::max(0.0, s_new - s_track);
        s_track = s_new;
        const PathPoint ref = stadium.point(s_track, clockwise);
        // Signed cross-track: positive when outside the loop (left of travel
        // for clockwise laps).
        const double left = ref.heading + (clockwise ? -kPi / 2 : kPi / 2);
        const double e = Eigen::Vector2d(std::cos(left), std::sin(left)).dot(pos - ref.pos) *
                         (clockwise ? 1.0 : -1.0);
        const double correction = std::clamp(0.08 * e, -0.7, 0.7);
        desired = ref.heading + (clockwise ? correction : -correction);
        ff_roll = ref.on_cap ? cap_roll : 0.0;
        if (progress >= 0.5 * perimeter) {
          const Eigen::Vector2d to_usv = usv - pos;
          const double bearing = std::atan2(to_usv.y(), to_usv.x());
          if (std::abs(wrap_angle(st.heading - bearing)) < 0.35 &&
              segment_distance(pos, usv, target) >= cs.nfz_radius + 2.0) {
            phase = exit_leg;
          }
        }
        break;
      }
      case exit_leg: {
        const Eigen::Vector2d to_usv = usv - pos;
        desired = std::atan2(to_usv.y(), to_usv.x());
        break;
      }
    }
    sim.step(desired, ff_roll);
    if (phase == exit_leg && (Eigen::Vector2d(sim.state().x, sim.state().y) - usv).norm() <=
                                 0.6 * cs.comm_radius) {
      return {sim.samples(), sim.state().t};
    }
  }
  throw ConfigError("heuristic_racetrack: no feasible exit found within 150 s");
}

// Constant-roll circle, generated analytically so the fitted curves satisfy
// the dynamics to fit precision. Turn direction keeps the orbit away from
// the NFZ.
inline std::vector<SimSample> simulate_loiter(const Scenario& scenario, int uav,
                                              const ResolvedStart& start, double duration) {
  const auto& vp = scenario.uavs[uav].params;
  const double radius = 90.0;
  const double roll_mag = std::min(
      std::atan(vp.airspeed * vp.airspeed / (vp.gravity * radius)), 0.85 * vp.roll_max);
  const double omega_mag = vp.gravity / vp.airspeed * std::tan(roll_mag);
  const double orbit_radius = vp.airspeed / omega_mag;

  const Eigen::Vector2d pos(start.x, start.y);
  const Eigen::Vector2d right(-std::sin(start.heading), std::cos(start.heading));
  const Eigen::Vector2d target = scenario.constraints.nfz_center;
  // Positive roll turns clockwise around the center on the right.
  const double sign =
      ((pos + orbit_radius * right) - target).norm() >= ((pos - orbit_radius * right) - target).norm()
          ? 1.0
          : -1.0;
  const Eigen::Vector2d center = pos + sign * orbit_radius * right;
  const double omega = sign * omega_mag;
  // Phase such that the analytic circle starts at the start pose.
  const Eigen::Vector2d radial = pos - center;
  const double eta0 = std::atan2(radial.y(), radial.x());

  std::vector<SimSample> samples;
  const double dt = 0.05;
  const int steps = static_cast<int>(std::ceil(duration / dt));
  for (int k = 0; k <= steps; ++k) {
    const double t = std::min(k * dt, duration);
    const double eta = eta0 + omega * t;
    SimSample s;
    s.t = t;
    s.x = center.x() + orbit_radius * std::cos(eta);
    s.y = center.y() + orbit_radius * std::sin(eta);
    s.heading = start.heading + omega * t;
    s.roll = sign * roll_mag;
    samples.push_back(s);
  }
  return samples;
}

// Quadratic pull toward a reference decision, subject to the full constraint
// set; projects near-feasible fits onto the feasible manifold. Final time
// stays frozen at the reference value.
class TrackingProblem {
 public:
  TrackingProblem(TrajectoryNlp& base, const Eigen::VectorXd& x_ref)
      : base_(base), x_ref_(x_ref), mask_(base.free_mask()) {
    mask_(base_.tf_index()) = 0.0;
  }

  Eigen::Index dimension() const { return base_.dimension(); }
  const Eigen::VectorXd& free_mask() const { return mask_; }

  void evaluate(const Eigen::VectorXd& x, double& cost, Eigen::VectorXd& eq,
                Eigen::VectorXd& ineq) {
    base_.evaluate(x, cost, eq, ineq);
    cost = 0.5 * (x - x_ref_).squaredNorm();
  }

  void merit_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& eq_coeff,
                      const Eigen::VectorXd& ineq_coeff, Eigen::VectorXd& grad) {
    base_.constraint_gradient(x, eq_coeff, ineq_coeff, grad);
    grad += x - x_ref_;
  }

 private:
  TrajectoryNlp& base_;
  Eigen::VectorXd x_ref_;
  Eigen::VectorXd mask_;
};

inline AlOptions al_options_from(const Scenario& scenario) {
  AlOptions opt;
  // Equalities are per-component; the report checks the per-node norm over
  // up to 5 rows, so leave headroom.
  opt.eq_tol = scenario.constraints.dynamics_tolerance * 0.4;
  opt.ineq_tol = scenario.solver.constraint_tol;
  opt.optimality_tol = scenario.solver.optimality_tol;
  opt.max_outer = scenario.solver.max_outer;
  opt.max_inner = scenario.solver.max_inner;
  return opt;
}

// Hull-based clamp of a decision into the scenario's box/bound geometry;
// keeps pathological fits from poisoning downstream solves.
inline void clamp_decision(DecisionVector& d, const Scenario& scenario) {
  const auto& box = scenario.constraints.mission_box;
  for (std::size_t i = 0; i < d.state_points.size(); ++i) {
    auto& s = d.state_points[i];
    auto& u = d.control_points[i];
    const auto& vp = scenario.uavs[i].params;
    s.row(state_row::kX) = s.row(state_row::kX).cwiseMax(box.x_min).cwiseMin(box.x_max);
    s.row(state_row::kY) = s.row(state_row::kY).cwiseMax(box.y_min).cwiseMin(box.y_max);
    u.row(control_row::kRoll) =
        u.row(control_row::kRoll).cwiseMax(vp.roll_min + 1e-4).cwiseMin(vp.roll_max - 1e-4);
    if (scenario.uavs[i].gimbal) {
      const auto& g = *scenario.uavs[i].gimbal;
      if (s.rows() == 6) {
        s.row(state_row::kGimbalAz) = s.row(state_row::kGimbalAz).cwiseMax(g.az_min).cwiseMin(g.az_max);
        s.row(state_row::kGimbalEl) = s.row(state_row::kGimbalEl).cwiseMax(g.el_min).cwiseMin(g.el_max);
      }
      if (u.rows() == 3) {
        u.row(control_row::kGimbalAzRate) =
            u.row(control_row::kGimbalAzRate).cwiseMax(g.az_rate_min).cwiseMin(g.az_rate_max);
        u.row(control_row::kGimbalElRate) =
            u.row(control_row::kGimbalElRate).cwiseMax(g.el_rate_min).cwiseMin(g.el_rate_max);
      }
    }
  }
  d.final_time = std::clamp(d.final_time, scenario.solver.tf_min, scenario.solver.tf_max);
}

// Pull a raw fitted seed onto the feasible manifold when it misses tolerance.
inline DecisionVector restore_feasibility(TrajectoryNlp& nlp, const Scenario& scenario,
                                          const DecisionVector& raw) {
  const ConstraintReport rep = nlp.report(raw);
  if (rep.dynamics_margin >= 0.2 * scenario.constraints.dynamics_tolerance &&
      rep.worst_geometry_margin() >= 0.0)
    return raw;
  TrackingProblem tracking(nlp, nlp.to_solver(raw));
  AlOptions opt = al_options_from(scenario);
  opt.eq_tol = scenario.constraints.dynamics_tolerance * 0.25;
  opt.max_outer = 60;
  opt.optimality_tol = 1e-3;
  const AlResult res = augmented_lagrangian_solve(tracking, nlp.to_solver(raw), opt);
  return nlp.from_solver(res.x);
}

}  // namespace planner_detail

// Stadium-pattern baseline as a decision vector: simulate, fit at the
// scenario degree, then restore feasibility onto the constraint set.
inline DecisionVector racetrack_decision(const Scenario& scenario) {
  if (scenario.uavs.size() != 1)
    throw ConfigError("heuristic_racetrack: defined for single-UAV scenarios");
  const auto starts = scenario.resolve_starts();
  const auto sim = planner_detail::simulate_racetrack(scenario, starts[0]);
  if (sim.duration > scenario.solver.tf_max)
    throw ConfigError("heuristic_racetrack: pattern exceeds the final-time bound");
  TrajectoryNlp nlp(scenario, starts);
  DecisionVector d = nlp.prototype();
  d.final_time = sim.duration;
  planner_detail::fill_uav_from_samples(d, 0, scenario, sim.samples, sim.duration, starts[0]);
  planner_detail::clamp_decision(d, scenario);
  d.final_time = sim.duration;  // the pattern's duration is not negotiable
  nlp.enforce_frozen(d);
  return planner_detail::restore_feasibility(nlp, scenario, d);
}

inline PlatformTrajectory heuristic_racetrack(const Scenario& scenario) {
  return racetrack_decision(scenario).make_trajectories(scenario)[0];
}

// Seed decisions for the solver. racetrack_seed reproduces the heuristic
// baseline; loiter_seed is a constant-roll circle; random_multistart jitters
// the loiter seed reproducibly.
inline DecisionVector initial_guess(const Scenario& scenario, SeedStrategy strategy,
                                    int variant = 0) {
  if (strategy == SeedStrategy::racetrack_seed) return racetrack_decision(scenario);

  const auto starts = scenario.resolve_starts();
  TrajectoryNlp nlp(scenario, starts);
  DecisionVector d = nlp.prototype();
  d.final_time = scenario.solver.tf_init;
  for (std::size_t i = 0; i < scenario.uavs.size(); ++i) {
    const auto samples = planner_detail::simulate_loiter(scenario, static_cast<int>(i), starts[i],
                                                         scenario.solver.tf_init);
    planner_detail::fill_uav_from_samples(d, static_cast<int>(i), scenario, samples,
                                          scenario.solver.tf_init, starts[i]);
  }
  nlp.enforce_frozen(d);
  if (strategy == SeedStrategy::loiter_seed) return d;

  // random_multistart: seeded jitter on everything but the frozen entries.
  auto rng = make_rng(scenario.seed, rng_stream::kMultistart, static_cast<std::uint64_t>(variant));
  std::normal_distribution<double> pos_jit(0.0, 25.0), ang_jit(0.0, 0.2), roll_jit(0.0, 0.08);
  std::uniform_real_distribution<double> tf_jit(0.85, 1.3);
  const int n = scenario.solver.degree;
  for (std::size_t i = 0; i < scenario.uavs.size(); ++i) {
    auto& s = d.state_points[i];
    auto& u = d.control_points[i];
    const auto& vp = scenario.uavs[i].params;
    for (int j = 1; j <= n; ++j) {
      s(state_row::kX, j) += pos_jit(rng);
      s(state_row::kY, j) += pos_jit(rng);
      s(state_row::kHeading, j) += ang_jit(rng);
      if (s.rows() == 6) {
        s(state_row::kGimbalAz, j) += ang_jit(rng);
        s(state_row::kGimbalEl, j) += ang_jit(rng);
      }
    }
    for (int j = 0; j <= n; ++j) {
      u(control_row::kRoll, j) = std::clamp(u(control_row::kRoll, j) + roll_jit(rng),
                                            vp.roll_min + 1e-3, vp.roll_max - 1e-3);
      if (u.rows() == 3) {
        u(control_row::kGimbalAzRate, j) += ang_jit(rng);
        u(control_row::kGimbalElRate, j) += ang_jit(rng);
      }
    }
  }
  d.final_time = std::clamp(d.final_time * tf_jit(rng), scenario.solver.tf_min,
                            scenario.solver.tf_max);
  nlp.enforce_frozen(d);
  return d;
}

// Multi-start constrained solve. Deterministic for a fixed (scenario, seed):
// candidates are ranked by feasibility, then cost, then seed index.
inline OptimizationResult solve(const Scenario& scenario) {
  scenario.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto starts = scenario.resolve_starts();
  const int k_starts = scenario.solver.multistart;

  struct Candidate {
    DecisionVector decision;
    AlResult al;
    ConstraintReport report;
    double cost = 0.0;
    bool feasible = false;
  };
  std::vector<Candidate> candidates(k_starts);

  for (int k = 0; k < k_starts; ++k) {
    DecisionVector seed;
    if (k == 0 && scenario.uavs.size() == 1) {
      try {
        seed = initial_guess(scenario, SeedStrategy::racetrack_seed);
      } catch (const ConfigError&) {
        seed = initial_guess(scenario, SeedStrategy::loiter_seed);
      }
    } else if (k <= 1) {
      seed = initial_guess(scenario, SeedStrategy::loiter_seed);
    } else {
      seed = initial_guess(scenario, SeedStrategy::random_multistart, k);
    }

    TrajectoryNlp nlp(scenario, starts);
    AlOptions opt = planner_detail::al_options_from(scenario);
    Candidate& cand = candidates[k];
    cand.al = augmented_lagrangian_solve(nlp, nlp.to_solver(seed), opt);
    cand.decision = nlp.from_solver(cand.al.x);
    cand.report = nlp.report(cand.decision);
    cand.cost = cand.al.cost;
    cand.feasible = cand.report.feasible(scenario.constraints.dynamics_tolerance,
                                         scenario.solver.constraint_tol);
  }

  int best = 0;
  for (int k = 1; k < k_starts; ++k) {
    const auto& a = candidates[k];
    const auto& b = candidates[best];
    if ((a.feasible && !b.feasible) || (a.feasible == b.feasible && a.cost < b.cost)) best = k;
  }

  const Candidate& chosen = candidates[best];
  OptimizationResult result;
  result.decision = chosen.decision;
  result.trajectories = chosen.decision.make_trajectories(scenario);
  result.cost = chosen.cost;
  {
    TrajectoryNlp nlp(scenario, starts);
    result.breakdown = nlp.breakdown(chosen.decision);
  }
  result.report = chosen.report;
  result.converged = chosen.feasible && chosen.al.converged;
  result.outer_iterations = chosen.al.outer_iterations;
  result.inner_iterations = chosen.al.inner_iterations;
  result.evaluations = chosen.al.evaluations;
  result.chosen_seed = best;
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace bearline
