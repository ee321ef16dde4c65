#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bearline/bernstein.hpp"
#include "bearline/dual.hpp"
#include "bearline/errors.hpp"
#include "bearline/information.hpp"
#include "bearline/rng.hpp"
#include "bearline/scenario.hpp"
#include "bearline/sensor.hpp"
#include "bearline/solver.hpp"
#include "bearline/trajectory.hpp"
#include "bearline/vehicle.hpp"

namespace bearline {

// Flattened decision: per-UAV state and control point matrices plus the
// shared final time. Columns are control points; row layout per vehicle.hpp.
struct DecisionVector {
  std::vector<Eigen::MatrixXd> state_points;    // ds x (n+1) per UAV
  std::vector<Eigen::MatrixXd> control_points;  // dc x (n+1) per UAV
  double final_time = 30.0;

  int degree() const { return static_cast<int>(state_points.at(0).cols()) - 1; }

  Eigen::Index flat_size() const {
    Eigen::Index total = 1;
    for (const auto& s : state_points) total += s.size();
    for (const auto& u : control_points) total += u.size();
    return total;
  }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd x(flat_size());
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < state_points.size(); ++i) {
      x.segment(at, state_points[i].size()) =
          Eigen::Map<const Eigen::VectorXd>(state_points[i].data(), state_points[i].size());
      at += state_points[i].size();
      x.segment(at, control_points[i].size()) =
          Eigen::Map<const Eigen::VectorXd>(control_points[i].data(), control_points[i].size());
      at += control_points[i].size();
    }
    x(at) = final_time;
    return x;
  }

  static DecisionVector unflatten(const Eigen::VectorXd& x, const DecisionVector& like) {
    DecisionVector d = like;
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < d.state_points.size(); ++i) {
      Eigen::Map<Eigen::VectorXd>(d.state_points[i].data(), d.state_points[i].size()) =
          x.segment(at, d.state_points[i].size());
      at += d.state_points[i].size();
      Eigen::Map<Eigen::VectorXd>(d.control_points[i].data(), d.control_points[i].size()) =
          x.segment(at, d.control_points[i].size());
      at += d.control_points[i].size();
    }
    d.final_time = x(at);
    return d;
  }

  std::vector<PlatformTrajectory> make_trajectories(const Scenario& scenario) const {
    std::vector<PlatformTrajectory> out;
    out.reserve(state_points.size());
    for (std::size_t i = 0; i < state_points.size(); ++i) {
      out.push_back(PlatformTrajectory{BernsteinCurve(state_points[i], final_time),
                                       BernsteinCurve(control_points[i], final_time),
                                       scenario.uavs[i]});
    }
    return out;
  }
};

struct CostBreakdown {
  double target_term = 0.0;  // w1 * Tr(PCRLB_T), m^2
  double usv_term = 0.0;     // w2 * Tr(PCRLB_USV), m^2
  double time_term = 0.0;    // w3 * t_f, s
  double target_trace = 0.0;  // unweighted traces
  double usv_trace = 0.0;
};

// Signed feasibility margins per constraint class; >= 0 means satisfied.
// Dynamics uses the defect-norm budget: margin = eps_dyn - max node defect.
struct ConstraintReport {
  double dynamics_margin = std::numeric_limits<double>::infinity();
  double roll_margin = std::numeric_limits<double>::infinity();
  double gimbal_angle_margin = std::numeric_limits<double>::infinity();
  double gimbal_rate_margin = std::numeric_limits<double>::infinity();
  double box_margin = std::numeric_limits<double>::infinity();
  double nfz_margin = std::numeric_limits<double>::infinity();
  double comm_margin = std::numeric_limits<double>::infinity();
  double tf_margin = std::numeric_limits<double>::infinity();
  double max_dynamics_residual = 0.0;

  double worst_geometry_margin() const {
    return std::min({roll_margin, gimbal_angle_margin, gimbal_rate_margin, box_margin, nfz_margin,
                     comm_margin, tf_margin});
  }
  bool feasible(double dynamics_tol, double geometry_tol) const {
    (void)dynamics_tol;
    return dynamics_margin >= 0.0 && worst_geometry_margin() >= -geometry_tol;
  }
};

struct OptimizationResult {
  std::vector<PlatformTrajectory> trajectories;
  DecisionVector decision;
  double cost = 0.0;
  CostBreakdown breakdown;
  ConstraintReport report;
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  int evaluations = 0;
  int chosen_seed = 0;
  double wall_time_s = 0.0;
};

namespace nlp_detail {

// Pose variables a node's information term depends on, in dual-slot order.
enum PoseVar { kPx = 0, kPy = 1, kPsi = 2, kPhi = 3, kGaz = 4, kGel = 5 };

struct NodeInfoTerm {
  // Symmetric 2x2 stored as (0,0), (0,1), (1,1); dm is d(entry)/d(pose var).
  std::array<double, 3> m{};
  std::array<std::array<double, 6>, 3> dm{};
  bool active = false;
};

using D6 = Dual<6>;

inline NodeInfoTerm info_node_term(double px, double py, double z_uav, double psi, double phi,
                                   double gaz, double gel, const UavSpec& spec,
                                   const Eigen::Vector3d& object, double noise_var_az,
                                   double noise_var_el) {
  NodeInfoTerm term;
  const double rho_sq_val =
      (object.x() - px) * (object.x() - px) + (object.y() - py) * (object.y() - py);
  if (rho_sq_val < 0.01) return term;  // within 0.1 m of the vertical axis

  const D6 x = D6::seed(px, kPx), y = D6::seed(py, kPy);
  const D6 heading = D6::seed(psi, kPsi), roll = D6::seed(phi, kPhi);
  const bool gimballed = spec.gimballed();
  const D6 cam_az = gimballed ? D6::seed(gaz, kGaz) : D6(spec.mount.boresight_azimuth);
  const D6 cam_el = gimballed ? D6::seed(gel, kGel) : D6(spec.mount.boresight_elevation);

  const Vec3T<D6> rel{D6(object.x()) - x, D6(object.y()) - y, D6(object.z() - z_uav)};

  // Smooth visibility via the camera-frame bearings.
  const Vec3T<D6> cam = to_camera_frame_t(rel, heading, D6(0.0), roll, cam_az, cam_el);
  D6 alpha, beta;
  bearing_angles_t(cam, alpha, beta);
  const D6 vis = fov_visibility_t(alpha, beta, spec.fov);

  // Inertial-frame measurement Jacobian, reduced to the estimated (x, y).
  const D6 rho_sq = rel.x * rel.x + rel.y * rel.y;
  const D6 r_sq = rho_sq + rel.z * rel.z;
  const D6 rho = sqrt(rho_sq);
  const D6 j00 = -rel.y / rho_sq;
  const D6 j01 = rel.x / rho_sq;
  const D6 den = r_sq * rho;
  const D6 j10 = -rel.x * rel.z / den;
  const D6 j11 = -rel.y * rel.z / den;

  const double ia = 1.0 / noise_var_az, ie = 1.0 / noise_var_el;
  const D6 m00 = vis * (j00 * j00 * ia + j10 * j10 * ie);
  const D6 m01 = vis * (j00 * j01 * ia + j10 * j11 * ie);
  const D6 m11 = vis * (j01 * j01 * ia + j11 * j11 * ie);

  term.active = true;
  term.m = {m00.v, m01.v, m11.v};
  for (int k = 0; k < 6; ++k) {
    term.dm[0][k] = m00.d[k];
    term.dm[1][k] = m01.d[k];
    term.dm[2][k] = m11.d[k];
  }
  return term;
}

// Inequality item kinds, assembled in a fixed deterministic order.
enum class IneqKind {
  roll_hi, roll_lo,
  rate_az_hi, rate_az_lo, rate_el_hi, rate_el_lo,
  gangle_az_hi, gangle_az_lo, gangle_el_hi, gangle_el_lo,
  box_x_hi, box_x_lo, box_y_hi, box_y_lo,
  nfz_node, nfz_ctrl,
  comm,
  tf_hi, tf_lo,
};

struct IneqItem {
  IneqKind kind;
  int uav;
  int col;  // control-point column or node index
};

}  // namespace nlp_detail

// Direct transcription of the mission design problem over Bernstein control
// points and the shared final time, in the shape the AL solver consumes.
// Solver-side variables are scaled copies of the physical ones.
class TrajectoryNlp {
 public:
  TrajectoryNlp(const Scenario& scenario, const std::vector<ResolvedStart>& starts)
      : scenario_(scenario), starts_(starts), n_(scenario.solver.degree) {
    const int n = n_;
    const int m = static_cast<int>(scenario.uavs.size());
    basis_ = Eigen::MatrixXd(n + 1, n + 1);
    for (int k = 0; k <= n; ++k)
      basis_.row(k) = bernstein_basis_row(n, static_cast<double>(k) / n);
    Eigen::MatrixXd basis_lower(n + 1, n);
    for (int k = 0; k <= n; ++k)
      basis_lower.row(k) = bernstein_basis_row(n - 1, static_cast<double>(k) / n);
    // d-hat(tau_k) = sum_m S(r, m) * dweight_(k, m): normalized-time derivative.
    dweight_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 0; k <= n; ++k)
      for (int mcol = 0; mcol <= n; ++mcol) {
        double w = 0.0;
        if (mcol >= 1) w += basis_lower(k, mcol - 1);
        if (mcol <= n - 1) w -= basis_lower(k, mcol);
        dweight_(k, mcol) = n * w;
      }

    state_dims_.resize(m);
    control_dims_.resize(m);
    state_offsets_.resize(m);
    control_offsets_.resize(m);
    Eigen::Index at = 0;
    for (int i = 0; i < m; ++i) {
      state_dims_[i] = state_dimension(scenario.uavs[i].gimballed());
      control_dims_[i] = control_dimension(scenario.uavs[i].gimballed());
      state_offsets_[i] = at;
      at += static_cast<Eigen::Index>(state_dims_[i]) * (n + 1);
      control_offsets_[i] = at;
      at += static_cast<Eigen::Index>(control_dims_[i]) * (n + 1);
    }
    tf_index_ = at;
    dim_ = at + 1;

    build_scaling_and_mask();
    build_ineq_items();
    num_eq_ = 0;
    for (int i = 0; i < m; ++i) num_eq_ += (state_dims_[i] == 6 ? 5 : 3) * (n + 1);
  }

  Eigen::Index dimension() const { return dim_; }
  const Eigen::VectorXd& free_mask() const { return free_mask_; }
  Eigen::Index num_equalities() const { return num_eq_; }
  Eigen::Index num_inequalities() const { return static_cast<Eigen::Index>(ineq_items_.size()); }

  Eigen::VectorXd to_solver(const DecisionVector& d) const {
    if (d.flat_size() != dim_)
      throw ConfigError("decision vector dimensions inconsistent with scenario");
    return d.flatten().cwiseQuotient(scale_);
  }
  DecisionVector from_solver(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw ConfigError("solver vector dimension mismatch");
    return DecisionVector::unflatten(x.cwiseProduct(scale_), prototype());
  }

  const Eigen::VectorXd& scale() const { return scale_; }
  Eigen::Index tf_index() const { return tf_index_; }

  DecisionVector prototype() const {
    DecisionVector d;
    const int m = static_cast<int>(scenario_.uavs.size());
    d.state_points.reserve(m);
    d.control_points.reserve(m);
    for (int i = 0; i < m; ++i) {
      d.state_points.emplace_back(Eigen::MatrixXd::Zero(state_dims_[i], n_ + 1));
      d.control_points.emplace_back(Eigen::MatrixXd::Zero(control_dims_[i], n_ + 1));
    }
    d.final_time = scenario_.solver.tf_init;
    return d;
  }

  // Pin the frozen entries (start column, z row) to their required values.
  void enforce_frozen(DecisionVector& d) const {
    for (std::size_t i = 0; i < d.state_points.size(); ++i) {
      auto& s = d.state_points[i];
      s.row(state_row::kZ).setConstant(-scenario_.uavs[i].params.altitude);
      s(state_row::kX, 0) = starts_[i].x;
      s(state_row::kY, 0) = starts_[i].y;
      s(state_row::kHeading, 0) = starts_[i].heading;
      if (state_dims_[i] == 6) {
        s(state_row::kGimbalAz, 0) = starts_[i].gimbal_az;
        s(state_row::kGimbalEl, 0) = starts_[i].gimbal_el;
      }
    }
  }

  void evaluate(const Eigen::VectorXd& x, double& cost, Eigen::VectorXd& eq,
                Eigen::VectorXd& ineq) {
    ensure_cache(x);
    cost = cache_.cost;
    eq = cache_.eq;
    ineq = cache_.ineq;
  }

  // Merit gradient in solver (scaled) coordinates:
  //   grad = d(cost)/dx + sum eq_coeff d(eq)/dx + sum ineq_coeff d(ineq)/dx.
  void merit_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& eq_coeff,
                      const Eigen::VectorXd& ineq_coeff, Eigen::VectorXd& grad) {
    ensure_cache(x);
    grad.setZero(dim_);
    if (!cache_.finite) return;
    add_cost_gradient(grad);
    add_eq_gradient(eq_coeff, grad);
    add_ineq_gradient(ineq_coeff, grad);
    grad.array() *= scale_.array();  // chain rule into scaled variables
  }

  // Constraint-gradient combination without the cost term; lets alternative
  // objectives (trajectory tracking) reuse the transcription.
  void constraint_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& eq_coeff,
                           const Eigen::VectorXd& ineq_coeff, Eigen::VectorXd& grad) {
    ensure_cache(x);
    grad.setZero(dim_);
    if (!cache_.finite) return;
    add_eq_gradient(eq_coeff, grad);
    add_ineq_gradient(ineq_coeff, grad);
    grad.array() *= scale_.array();
  }

  // Cost and gradient only (no constraints); used by gradient-check tests.
  double cost_with_gradient(const DecisionVector& d, Eigen::VectorXd* grad_physical) {
    const Eigen::VectorXd x = to_solver(d);
    ensure_cache(x);
    if (grad_physical) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
      if (cache_.finite) add_cost_gradient(g);
      *grad_physical = g;
    }
    return cache_.cost;
  }

  CostBreakdown breakdown(const DecisionVector& d) {
    ensure_cache(to_solver(d));
    return cache_.breakdown;
  }

  ConstraintReport report(const DecisionVector& d) {
    ensure_cache(to_solver(d));
    return build_report();
  }

 private:
  struct Cache {
    bool valid = false;
    bool finite = true;
    Eigen::VectorXd x;
    double cost = 0.0;
    CostBreakdown breakdown;
    Eigen::VectorXd eq, ineq;
    double tf = 0.0;
    // Per UAV: values at nodes.
    std::vector<Eigen::MatrixXd> pose;   // ds x (n+1)
    std::vector<Eigen::MatrixXd> ctrl;   // dc x (n+1)
    std::vector<Eigen::MatrixXd> dhat;   // ds x (n+1), normalized-time derivative
    // Information terms per object: [object][uav * (n+1) + node].
    std::array<std::vector<nlp_detail::NodeInfoTerm>, 2> terms;
    std::array<Eigen::Matrix2d, 2> fim;
    std::array<Eigen::Matrix2d, 2> fim_inv_sq;  // F^-1 F^-1
  } cache_;

  void ensure_cache(const Eigen::VectorXd& x) {
    if (cache_.valid && cache_.x.size() == x.size() && cache_.x == x) return;
    cache_.x = x;
    cache_.valid = true;
    compute(x);
  }

  void build_scaling_and_mask() {
    scale_ = Eigen::VectorXd::Ones(dim_);
    free_mask_ = Eigen::VectorXd::Ones(dim_);
    const int m = static_cast<int>(scenario_.uavs.size());
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= n_; ++j) {
        scale_(state_index(i, state_row::kX, j)) = 100.0;
        scale_(state_index(i, state_row::kY, j)) = 100.0;
        scale_(state_index(i, state_row::kZ, j)) = 100.0;
        scale_(state_index(i, state_row::kHeading, j)) = 1.0;
        scale_(control_index(i, control_row::kRoll, j)) = 0.3;
        if (state_dims_[i] == 6) {
          scale_(state_index(i, state_row::kGimbalAz, j)) = 1.0;
          scale_(state_index(i, state_row::kGimbalEl, j)) = 1.0;
          scale_(control_index(i, control_row::kGimbalAzRate, j)) = 2.0;
          scale_(control_index(i, control_row::kGimbalElRate, j)) = 2.0;
        }
        free_mask_(state_index(i, state_row::kZ, j)) = 0.0;
      }
      for (int r = 0; r < state_dims_[i]; ++r) free_mask_(state_index(i, r, 0)) = 0.0;
    }
    scale_(tf_index_) = 30.0;
  }

  void build_ineq_items() {
    using nlp_detail::IneqItem;
    using nlp_detail::IneqKind;
    const int m = static_cast<int>(scenario_.uavs.size());
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= n_; ++j) {
        ineq_items_.push_back({IneqKind::roll_hi, i, j});
        ineq_items_.push_back({IneqKind::roll_lo, i, j});
      }
      if (state_dims_[i] == 6) {
        for (int j = 0; j <= n_; ++j) {
          ineq_items_.push_back({IneqKind::rate_az_hi, i, j});
          ineq_items_.push_back({IneqKind::rate_az_lo, i, j});
          ineq_items_.push_back({IneqKind::rate_el_hi, i, j});
          ineq_items_.push_back({IneqKind::rate_el_lo, i, j});
          ineq_items_.push_back({IneqKind::gangle_az_hi, i, j});
          ineq_items_.push_back({IneqKind::gangle_az_lo, i, j});
          ineq_items_.push_back({IneqKind::gangle_el_hi, i, j});
          ineq_items_.push_back({IneqKind::gangle_el_lo, i, j});
        }
      }
      for (int j = 0; j <= n_; ++j) {
        ineq_items_.push_back({IneqKind::box_x_hi, i, j});
        ineq_items_.push_back({IneqKind::box_x_lo, i, j});
        ineq_items_.push_back({IneqKind::box_y_hi, i, j});
        ineq_items_.push_back({IneqKind::box_y_lo, i, j});
      }
      for (int j = 0; j <= n_; ++j) ineq_items_.push_back({IneqKind::nfz_node, i, j});
      for (int j = 0; j <= n_; ++j) ineq_items_.push_back({IneqKind::nfz_ctrl, i, j});
      ineq_items_.push_back({IneqKind::comm, i, 0});
    }
    ineq_items_.push_back({IneqKind::tf_hi, 0, 0});
    ineq_items_.push_back({IneqKind::tf_lo, 0, 0});
  }

  Eigen::Index state_index(int uav, int row, int col) const {
    return state_offsets_[uav] + static_cast<Eigen::Index>(col) * state_dims_[uav] + row;
  }
  Eigen::Index control_index(int uav, int row, int col) const {
    return control_offsets_[uav] + static_cast<Eigen::Index>(col) * control_dims_[uav] + row;
  }

  void compute(const Eigen::VectorXd& x_scaled) {
    const Eigen::VectorXd x = x_scaled.cwiseProduct(scale_);
    const int m = static_cast<int>(scenario_.uavs.size());
    const int cols = n_ + 1;
    cache_.tf = x(tf_index_);
    cache_.finite = cache_.tf > 0.1 && cache_.tf < 1e4;
    cache_.eq.setZero(num_eq_);
    cache_.ineq.setZero(static_cast<Eigen::Index>(ineq_items_.size()));
    if (!cache_.finite) {
      cache_.cost = std::numeric_limits<double>::infinity();
      return;
    }

    cache_.pose.assign(m, Eigen::MatrixXd());
    cache_.ctrl.assign(m, Eigen::MatrixXd());
    cache_.dhat.assign(m, Eigen::MatrixXd());
    for (int i = 0; i < m; ++i) {
      const Eigen::Map<const Eigen::MatrixXd> s(x.data() + state_offsets_[i], state_dims_[i], cols);
      const Eigen::Map<const Eigen::MatrixXd> u(x.data() + control_offsets_[i], control_dims_[i],
                                                cols);
      cache_.pose[i] = s * basis_.transpose();
      cache_.ctrl[i] = u * basis_.transpose();
      cache_.dhat[i] = s * dweight_.transpose();
    }

    compute_cost(x);
    compute_eq(x);
    compute_ineq(x);
  }

  void compute_cost(const Eigen::VectorXd& x) {
    const int m = static_cast<int>(scenario_.uavs.size());
    const int cols = n_ + 1;
    const std::array<Eigen::Vector3d, 2> objects = {scenario_.target.position,
                                                    scenario_.usv.position};
    const std::array<const PriorSpec*, 2> priors = {&scenario_.target.prior, &scenario_.usv.prior};
    const std::array<double, 2> weights = {scenario_.weights.w_target, scenario_.weights.w_usv};

    double cost = scenario_.weights.w_time * cache_.tf;
    cache_.breakdown = CostBreakdown{};
    cache_.breakdown.time_term = cost;

    for (int o = 0; o < 2; ++o) {
      auto& terms = cache_.terms[o];
      terms.assign(static_cast<std::size_t>(m) * cols, nlp_detail::NodeInfoTerm{});
      Eigen::Matrix2d fim = information_prior(*priors[o]);
      for (int i = 0; i < m; ++i) {
        const auto& spec = scenario_.uavs[i];
        const double z_uav = -spec.params.altitude;
        for (int k = 0; k < cols; ++k) {
          const double gaz = state_dims_[i] == 6 ? cache_.pose[i](state_row::kGimbalAz, k) : 0.0;
          const double gel = state_dims_[i] == 6 ? cache_.pose[i](state_row::kGimbalEl, k) : 0.0;
          auto term = nlp_detail::info_node_term(
              cache_.pose[i](state_row::kX, k), cache_.pose[i](state_row::kY, k), z_uav,
              cache_.pose[i](state_row::kHeading, k), cache_.ctrl[i](control_row::kRoll, k), gaz,
              gel, spec, objects[o], scenario_.noise_var_az, scenario_.noise_var_el);
          if (term.active) {
            fim(0, 0) += term.m[0];
            fim(0, 1) += term.m[1];
            fim(1, 0) += term.m[1];
            fim(1, 1) += term.m[2];
          }
          terms[static_cast<std::size_t>(i) * cols + k] = term;
        }
      }
      cache_.fim[o] = fim;
      const double det = fim(0, 0) * fim(1, 1) - fim(0, 1) * fim(1, 0);
      double trace_inv;
      if (det > 1e-15) {
        trace_inv = (fim(0, 0) + fim(1, 1)) / det;
        Eigen::Matrix2d inv;
        inv << fim(1, 1), -fim(0, 1), -fim(1, 0), fim(0, 0);
        inv /= det;
        cache_.fim_inv_sq[o] = inv * inv;
      } else {
        // Unobservable direction: finite surrogate keeps the merit usable.
        trace_inv = fim.trace() / std::max(det, 1e-300) + 1e6;
        cache_.fim_inv_sq[o].setZero();
      }
      if (o == 0) {
        cache_.breakdown.target_trace = trace_inv;
        cache_.breakdown.target_term = weights[o] * trace_inv;
      } else {
        cache_.breakdown.usv_trace = trace_inv;
        cache_.breakdown.usv_term = weights[o] * trace_inv;
      }
      cost += weights[o] * trace_inv;
    }
    (void)x;
    cache_.cost = cost;
  }

  static Eigen::Matrix2d information_prior(const PriorSpec& prior) {
    const Eigen::Matrix2d& p = prior.covariance;
    const double det = p(0, 0) * p(1, 1) - p(0, 1) * p(1, 0);
    Eigen::Matrix2d inv;
    inv << p(1, 1), -p(0, 1), -p(1, 0), p(0, 0);
    return inv / det;
  }

  void compute_eq(const Eigen::VectorXd& x) {
    (void)x;
    const int m = static_cast<int>(scenario_.uavs.size());
    const double inv_tf = 1.0 / cache_.tf;
    Eigen::Index at = 0;
    for (int i = 0; i < m; ++i) {
      const auto& params = scenario_.uavs[i].params;
      const bool gimballed = state_dims_[i] == 6;
      for (int k = 0; k <= n_; ++k) {
        const double psi = cache_.pose[i](state_row::kHeading, k);
        const double phi = cache_.ctrl[i](control_row::kRoll, k);
        cache_.eq(at++) = inv_tf * cache_.dhat[i](state_row::kX, k) -
                          params.airspeed * std::cos(psi);
        cache_.eq(at++) = inv_tf * cache_.dhat[i](state_row::kY, k) -
                          params.airspeed * std::sin(psi);
        cache_.eq(at++) = inv_tf * cache_.dhat[i](state_row::kHeading, k) -
                          params.gravity / params.airspeed * std::tan(phi);
        if (gimballed) {
          cache_.eq(at++) = inv_tf * cache_.dhat[i](state_row::kGimbalAz, k) -
                            cache_.ctrl[i](control_row::kGimbalAzRate, k);
          cache_.eq(at++) = inv_tf * cache_.dhat[i](state_row::kGimbalEl, k) -
                            cache_.ctrl[i](control_row::kGimbalElRate, k);
        }
      }
    }
  }

  void compute_ineq(const Eigen::VectorXd& x) {
    using nlp_detail::IneqKind;
    const auto& cs = scenario_.constraints;
    const auto& box = cs.mission_box;
    for (std::size_t idx = 0; idx < ineq_items_.size(); ++idx) {
      const auto& item = ineq_items_[idx];
      const int i = item.uav;
      const int j = item.col;
      double g = 0.0;
      switch (item.kind) {
        case IneqKind::roll_hi:
          g = x(control_index(i, control_row::kRoll, j)) - scenario_.uavs[i].params.roll_max;
          break;
        case IneqKind::roll_lo:
          g = scenario_.uavs[i].params.roll_min - x(control_index(i, control_row::kRoll, j));
          break;
        case IneqKind::rate_az_hi:
          g = x(control_index(i, control_row::kGimbalAzRate, j)) -
              scenario_.uavs[i].gimbal->az_rate_max;
          break;
        case IneqKind::rate_az_lo:
          g = scenario_.uavs[i].gimbal->az_rate_min -
              x(control_index(i, control_row::kGimbalAzRate, j));
          break;
        case IneqKind::rate_el_hi:
          g = x(control_index(i, control_row::kGimbalElRate, j)) -
              scenario_.uavs[i].gimbal->el_rate_max;
          break;
        case IneqKind::rate_el_lo:
          g = scenario_.uavs[i].gimbal->el_rate_min -
              x(control_index(i, control_row::kGimbalElRate, j));
          break;
        case IneqKind::gangle_az_hi:
          g = x(state_index(i, state_row::kGimbalAz, j)) - scenario_.uavs[i].gimbal->az_max;
          break;
        case IneqKind::gangle_az_lo:
          g = scenario_.uavs[i].gimbal->az_min - x(state_index(i, state_row::kGimbalAz, j));
          break;
        case IneqKind::gangle_el_hi:
          g = x(state_index(i, state_row::kGimbalEl, j)) - scenario_.uavs[i].gimbal->el_max;
          break;
        case IneqKind::gangle_el_lo:
          g = scenario_.uavs[i].gimbal->el_min - x(state_index(i, state_row::kGimbalEl, j));
          break;
        case IneqKind::box_x_hi:
          g = x(state_index(i, state_row::kX, j)) - box.x_max;
          break;
        case IneqKind::box_x_lo:
          g = box.x_min - x(state_index(i, state_row::kX, j));
          break;
        case IneqKind::box_y_hi:
          g = x(state_index(i, state_row::kY, j)) - box.y_max;
          break;
        case IneqKind::box_y_lo:
          g = box.y_min - x(state_index(i, state_row::kY, j));
          break;
        case IneqKind::nfz_node: {
          const double dx = cache_.pose[i](state_row::kX, j) - cs.nfz_center.x();
          const double dy = cache_.pose[i](state_row::kY, j) - cs.nfz_center.y();
          g = cs.nfz_radius - std::sqrt(dx * dx + dy * dy + 1e-12);
          break;
        }
        case IneqKind::nfz_ctrl: {
          const double dx = x(state_index(i, state_row::kX, j)) - cs.nfz_center.x();
          const double dy = x(state_index(i, state_row::kY, j)) - cs.nfz_center.y();
          g = cs.nfz_radius - std::sqrt(dx * dx + dy * dy + 1e-12);
          break;
        }
        case IneqKind::comm: {
          const double dx = x(state_index(i, state_row::kX, n_)) - cs.comm_center.x();
          const double dy = x(state_index(i, state_row::kY, n_)) - cs.comm_center.y();
          g = std::sqrt(dx * dx + dy * dy + 1e-12) - cs.comm_radius;
          break;
        }
        case IneqKind::tf_hi:
          g = cache_.tf - scenario_.solver.tf_max;
          break;
        case IneqKind::tf_lo:
          g = scenario_.solver.tf_min - cache_.tf;
          break;
      }
      cache_.ineq(static_cast<Eigen::Index>(idx)) = g;
    }
  }

  void add_cost_gradient(Eigen::VectorXd& grad) {
    const int m = static_cast<int>(scenario_.uavs.size());
    const int cols = n_ + 1;
    const std::array<double, 2> weights = {scenario_.weights.w_target, scenario_.weights.w_usv};
    grad(tf_index_) += scenario_.weights.w_time;

    for (int o = 0; o < 2; ++o) {
      const Eigen::Matrix2d& g2 = cache_.fim_inv_sq[o];
      // d Tr(F^-1)/d m_ab = -(F^-1 F^-1)_ab; off-diagonal entries count twice.
      const double c00 = -weights[o] * g2(0, 0);
      const double c01 = -weights[o] * 2.0 * g2(0, 1);
      const double c11 = -weights[o] * g2(1, 1);
      for (int i = 0; i < m; ++i) {
        const bool gimballed = state_dims_[i] == 6;
        for (int k = 0; k < cols; ++k) {
          const auto& term = cache_.terms[o][static_cast<std::size_t>(i) * cols + k];
          if (!term.active) continue;
          std::array<double, 6> dpose{};
          for (int p = 0; p < 6; ++p)
            dpose[p] = c00 * term.dm[0][p] + c01 * term.dm[1][p] + c11 * term.dm[2][p];
          for (int j = 0; j <= n_; ++j) {
            const double b = basis_(k, j);
            if (b == 0.0) continue;
            grad(state_index(i, state_row::kX, j)) += dpose[nlp_detail::kPx] * b;
            grad(state_index(i, state_row::kY, j)) += dpose[nlp_detail::kPy] * b;
            grad(state_index(i, state_row::kHeading, j)) += dpose[nlp_detail::kPsi] * b;
            grad(control_index(i, control_row::kRoll, j)) += dpose[nlp_detail::kPhi] * b;
            if (gimballed) {
              grad(state_index(i, state_row::kGimbalAz, j)) += dpose[nlp_detail::kGaz] * b;
              grad(state_index(i, state_row::kGimbalEl, j)) += dpose[nlp_detail::kGel] * b;
            }
          }
        }
      }
    }
  }

  void add_eq_gradient(const Eigen::VectorXd& coeff, Eigen::VectorXd& grad) {
    const int m = static_cast<int>(scenario_.uavs.size());
    const double inv_tf = 1.0 / cache_.tf;
    Eigen::Index at = 0;
    for (int i = 0; i < m; ++i) {
      const auto& params = scenario_.uavs[i].params;
      const bool gimballed = state_dims_[i] == 6;
      for (int k = 0; k <= n_; ++k) {
        const double psi = cache_.pose[i](state_row::kHeading, k);
        const double phi = cache_.ctrl[i](control_row::kRoll, k);
        const double cx = coeff(at);
        const double cy = coeff(at + 1);
        const double cpsi = coeff(at + 2);
        const double cgaz = gimballed ? coeff(at + 3) : 0.0;
        const double cgel = gimballed ? coeff(at + 4) : 0.0;
        at += gimballed ? 5 : 3;

        const double sec_phi = 1.0 / std::cos(phi);
        const double dtan = params.gravity / params.airspeed * sec_phi * sec_phi;
        for (int j = 0; j <= n_; ++j) {
          const double b = basis_(k, j);
          const double w = inv_tf * dweight_(k, j);
          if (w != 0.0) {
            grad(state_index(i, state_row::kX, j)) += cx * w;
            grad(state_index(i, state_row::kY, j)) += cy * w;
            grad(state_index(i, state_row::kHeading, j)) += cpsi * w;
            if (gimballed) {
              grad(state_index(i, state_row::kGimbalAz, j)) += cgaz * w;
              grad(state_index(i, state_row::kGimbalEl, j)) += cgel * w;
            }
          }
          if (b != 0.0) {
            grad(state_index(i, state_row::kHeading, j)) +=
                cx * params.airspeed * std::sin(psi) * b - cy * params.airspeed * std::cos(psi) * b;
            grad(control_index(i, control_row::kRoll, j)) += -cpsi * dtan * b;
            if (gimballed) {
              grad(control_index(i, control_row::kGimbalAzRate, j)) += -cgaz * b;
              grad(control_index(i, control_row::kGimbalElRate, j)) += -cgel * b;
            }
          }
        }
        const double dtf = -inv_tf * inv_tf;
        grad(tf_index_) += cx * dtf * cache_.dhat[i](state_row::kX, k) +
                           cy * dtf * cache_.dhat[i](state_row::kY, k) +
                           cpsi * dtf * cache_.dhat[i](state_row::kHeading, k);
        if (gimballed) {
          grad(tf_index_) += cgaz * dtf * cache_.dhat[i](state_row::kGimbalAz, k) +
                             cgel * dtf * cache_.dhat[i](state_row::kGimbalEl, k);
        }
      }
    }
  }

  void add_ineq_gradient(const Eigen::VectorXd& coeff, Eigen::VectorXd& grad) {
    using nlp_detail::IneqKind;
    const auto& cs = scenario_.constraints;
    const Eigen::VectorXd x = cache_.x.cwiseProduct(scale_);
    for (std::size_t idx = 0; idx < ineq_items_.size(); ++idx) {
      const double c = coeff(static_cast<Eigen::Index>(idx));
      if (c == 0.0) continue;
      const auto& item = ineq_items_[idx];
      const int i = item.uav;
      const int j = item.col;
      switch (item.kind) {
        case IneqKind::roll_hi:
          grad(control_index(i, control_row::kRoll, j)) += c;
          break;
        case IneqKind::roll_lo:
          grad(control_index(i, control_row::kRoll, j)) -= c;
          break;
        case IneqKind::rate_az_hi:
          grad(control_index(i, control_row::kGimbalAzRate, j)) += c;
          break;
        case IneqKind::rate_az_lo:
          grad(control_index(i, control_row::kGimbalAzRate, j)) -= c;
          break;
        case IneqKind::rate_el_hi:
          grad(control_index(i, control_row::kGimbalElRate, j)) += c;
          break;
        case IneqKind::rate_el_lo:
          grad(control_index(i, control_row::kGimbalElRate, j)) -= c;
          break;
        case IneqKind::gangle_az_hi:
          grad(state_index(i, state_row::kGimbalAz, j)) += c;
          break;
        case IneqKind::gangle_az_lo:
          grad(state_index(i, state_row::kGimbalAz, j)) -= c;
          break;
        case IneqKind::gangle_el_hi:
          grad(state_index(i, state_row::kGimbalEl, j)) += c;
          break;
        case IneqKind::gangle_el_lo:
          grad(state_index(i, state_row::kGimbalEl, j)) -= c;
          break;
        case IneqKind::box_x_hi:
          grad(state_index(i, state_row::kX, j)) += c;
          break;
        case IneqKind::box_x_lo:
          grad(state_index(i, state_row::kX, j)) -= c;
          break;
        case IneqKind::box_y_hi:
          grad(state_index(i, state_row::kY, j)) += c;
          break;
        case IneqKind::box_y_lo:
          grad(state_index(i, state_row::kY, j)) -= c;
          break;
        case IneqKind::nfz_node: {
          const double dx = cache_.pose[i](state_row::kX, j) - cs.nfz_center.x();
          const double dy = cache_.pose[i](state_row::kY, j) - cs.nfz_center.y();
          const double dist = std::sqrt(dx * dx + dy * dy + 1e-12);
          for (int col = 0; col <= n_; ++col) {
            const double b = basis_(j, col);
            if (b == 0.0) continue;
            grad(state_index(i, state_row::kX, col)) += -c * dx / dist * b;
            grad(state_index(i, state_row::kY, col)) += -c * dy / dist * b;
          }
          break;
        }
        case IneqKind::nfz_ctrl: {
          const double dx = x(state_index(i, state_row::kX, j)) - cs.nfz_center.x();
          const double dy = x(state_index(i, state_row::kY, j)) - cs.nfz_center.y();
          const double dist = std::sqrt(dx * dx + dy * dy + 1e-12);
          grad(state_index(i, state_row::kX, j)) += -c * dx / dist;
          grad(state_index(i, state_row::kY, j)) += -c * dy / dist;
          break;
        }
        case IneqKind::comm: {
          const double dx = x(state_index(i, state_row::kX, n_)) - cs.comm_center.x();
          const double dy = x(state_index(i, state_row::kY, n_)) - cs.comm_center.y();
          const double dist = std::sqrt(dx * dx + dy * dy + 1e-12);
          grad(state_index(i, state_row::kX, n_)) += c * dx / dist;
          grad(state_index(i, state_row::kY, n_)) += c * dy / dist;
          break;
        }
        case IneqKind::tf_hi:
          grad(tf_index_) += c;
          break;
        case IneqKind::tf_lo:
          grad(tf_index_) -= c;
          break;
      }
    }
  }

  ConstraintReport build_report() {
    using nlp_detail::IneqKind;
    ConstraintReport rep;
    // Dynamics: per-node defect norm across state rows.
    const int m = static_cast<int>(scenario_.uavs.size());
    Eigen::Index at = 0;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      const int rows = state_dims_[i] == 6 ? 5 : 3;
      for (int k = 0; k <= n_; ++k) {
        double sq = 0.0;
        for (int r = 0; r < rows; ++r) sq += cache_.eq(at + r) * cache_.eq(at + r);
        worst = std::max(worst, std::sqrt(sq));
        at += rows;
      }
    }
    rep.max_dynamics_residual = worst;
    rep.dynamics_margin = scenario_.constraints.dynamics_tolerance - worst;

    auto fold = [&](double& margin, double g) { margin = std::min(margin, -g); };
    for (std::size_t idx = 0; idx < ineq_items_.size(); ++idx) {
      const double g = cache_.ineq(static_cast<Eigen::Index>(idx));
      switch (ineq_items_[idx].kind) {
        case IneqKind::roll_hi:
        case IneqKind::roll_lo:
          fold(rep.roll_margin, g);
          break;
        case IneqKind::rate_az_hi:
        case IneqKind::rate_az_lo:
        case IneqKind::rate_el_hi:
        case IneqKind::rate_el_lo:
          fold(rep.gimbal_rate_margin, g);
          break;
        case IneqKind::gangle_az_hi:
        case IneqKind::gangle_az_lo:
        case IneqKind::gangle_el_hi:
        case IneqKind::gangle_el_lo:
          fold(rep.gimbal_angle_margin, g);
          break;
        case IneqKind::box_x_hi:
        case IneqKind::box_x_lo:
        case IneqKind::box_y_hi:
        case IneqKind::box_y_lo:
          fold(rep.box_margin, g);
          break;
        case IneqKind::nfz_node:
        case IneqKind::nfz_ctrl:
          fold(rep.nfz_margin, g);
          break;
        case IneqKind::comm:
          fold(rep.comm_margin, g);
          break;
        case IneqKind::tf_hi:
        case IneqKind::tf_lo:
          fold(rep.tf_margin, g);
          break;
      }
    }
    return rep;
  }

  const Scenario& scenario_;
  std::vector<ResolvedStart> starts_;
  int n_;
  Eigen::MatrixXd basis_;    // (n+1) x (n+1): basis_(k, j) = b_{j,n}(tau_k)
  Eigen::MatrixXd dweight_;  // (n+1) x (n+1): normalized derivative weights
  std::vector<int> state_dims_, control_dims_;
  std::vector<Eigen::Index> state_offsets_, control_offsets_;
  Eigen::Index tf_index_ = 0;
  Eigen::Index dim_ = 0;
  Eigen::Index num_eq_ = 0;
  Eigen::VectorXd scale_, free_mask_;
  std::vector<nlp_detail::IneqItem> ineq_items_;
};

// Literal weighted objective: J = w1 Tr(PCRLB_T) + w2 Tr(PCRLB_USV) + w3 t_f,
// with trace terms from the node-grid FIM under smooth visibility.
inline std::pair<double, CostBreakdown> evaluate_cost(const DecisionVector& decision,
                                                      const Scenario& scenario) {
  TrajectoryNlp nlp(scenario, scenario.resolve_starts());
  const double cost = nlp.cost_with_gradient(decision, nullptr);
  return {cost, nlp.breakdown(decision)};
}

inline ConstraintReport evaluate_constraints(const DecisionVector& decision,
                                             const Scenario& scenario) {
  TrajectoryNlp nlp(scenario, scenario.resolve_starts());
  return nlp.report(decision);
}

}  // namespace bearline
