#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "bearline/errors.hpp"
#include "bearline/estimators.hpp"
#include "bearline/information.hpp"
#include "bearline/parallel.hpp"
#include "bearline/rng.hpp"
#include "bearline/scenario.hpp"
#include "bearline/trajectory_nlp.hpp"

namespace bearline {

struct TrialReport {
  std::array<double, 2> terminal_error{};     // m, indexed by ObjectId order
  std::array<Eigen::Vector2d, 2> fused_mean;  // x-y estimates
  std::array<Eigen::Vector2d, 2> error_vec;
  std::uint64_t seed = 0;
};

struct Histogram {
  std::vector<double> edges;  // 31 edges for 30 bins
  std::vector<int> counts;    // overflow folds into the last bin
};

struct ObjectStats {
  double rmse = 0.0;
  double sd = 0.0;
  double bias = 0.0;        // norm of the mean error vector
  double root_pcrlb = 0.0;  // crisp-gated bound at the camera ticks
  double p95 = 0.0;
  Histogram histogram;
};

struct CampaignSummary {
  std::array<ObjectStats, 2> objects;  // [target, usv]
  Histogram combined;                  // per-trial combined error
  int trial_count = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t objects_signature = 0;  // guards cross-scenario comparisons
  std::string trajectory_id;
  std::vector<TrialReport> trials;

  const ObjectStats& of(ObjectId id) const {
    return objects[id == ObjectId::target ? 0 : 1];
  }
};

// Order-stable fingerprint of the estimated objects (positions and priors).
inline std::uint64_t objects_signature(const Scenario& scenario) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  for (const ObjectId id : {ObjectId::target, ObjectId::collaborating_usv}) {
    const auto& obj = scenario.object(id);
    for (int i = 0; i < 3; ++i) mix(obj.position(i));
    for (int i = 0; i < 4; ++i) mix(obj.prior.covariance(i / 2, i % 2));
  }
  return h;
}

namespace validation_detail {

inline Histogram make_histogram(std::vector<double> errors) {
  Histogram h;
  if (errors.empty()) return h;
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const double p995 = sorted[static_cast<std::size_t>(0.995 * (sorted.size() - 1))];
  const double hi = std::max(p995, 1e-9);
  const int bins = 30;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = hi * b / bins;
  h.counts.assign(bins, 0);
  for (double e : errors) {
    int b = static_cast<int>(e / hi * bins);
    b = std::clamp(b, 0, bins - 1);  // tail above p99.5 folds into the last bin
    ++h.counts[b];
  }
  return h;
}

inline ObjectStats object_stats(const std::vector<Eigen::Vector2d>& error_vecs) {
  ObjectStats st;
  const auto n = static_cast<double>(error_vecs.size());
  Eigen::Vector2d bias_vec = Eigen::Vector2d::Zero();
  double sq_sum = 0.0;
  std::vector<double> norms;
  norms.reserve(error_vecs.size());
  for (const auto& e : error_vecs) {
    bias_vec += e;
    sq_sum += e.squaredNorm();
    norms.push_back(e.norm());
  }
  bias_vec /= n;
  st.bias = bias_vec.norm();
  st.rmse = std::sqrt(sq_sum / n);
  double centered = 0.0;
  for (const auto& e : error_vecs) centered += (e - bias_vec).squaredNorm();
  st.sd = std::sqrt(centered / n);
  std::vector<double> sorted = norms;
  std::sort(sorted.begin(), sorted.end());
  st.p95 = sorted[static_cast<std::size_t>(0.95 * (sorted.size() - 1))];
  st.histogram = make_histogram(norms);
  return st;
}

}  // namespace validation_detail

// Seeded Monte Carlo campaign: per trial, draw the shared prior, synthesize
// gated measurements along the trajectories at the camera rate, run the
// per-UAV EKFs, fuse at t_f, and record the planar error per object.
// Refuses infeasible trajectories.
inline CampaignSummary run_campaign(const Scenario& scenario,
                                    const std::vector<PlatformTrajectory>& trajectories,
                                    int n_trials, std::uint64_t master_seed,
                                    const std::string& trajectory_id = "",
                                    bool keep_trials = false) {
  if (n_trials < 1) throw ConfigError("run_campaign: n_trials must be >= 1");
  if (trajectories.size() != scenario.uavs.size())
    throw ConfigError("run_campaign: trajectory count mismatch");

  {
    DecisionVector d;
    for (const auto& traj : trajectories) {
      d.state_points.push_back(traj.state_curve.control_points());
      d.control_points.push_back(traj.control_curve.control_points());
    }
    d.final_time = trajectories.front().final_time();
    const ConstraintReport rep = evaluate_constraints(d, scenario);
    if (!rep.feasible(scenario.constraints.dynamics_tolerance, scenario.solver.constraint_tol)) {
      throw ConfigError(
          "run_campaign: infeasible trajectory (dynamics margin " +
          std::to_string(rep.dynamics_margin) + ", geometry margin " +
          std::to_string(rep.worst_geometry_margin()) + ")");
    }
  }

  const double t_f = trajectories.front().final_time();
  const std::vector<double> ticks = scenario.camera_ticks(t_f);
  const int n_uav = static_cast<int>(trajectories.size());
  const std::array<ObjectId, 2> ids = {ObjectId::target, ObjectId::collaborating_usv};

  CampaignSummary summary;
  summary.trial_count = n_trials;
  summary.master_seed = master_seed;
  summary.trajectory_id = trajectory_id;
  summary.objects_signature = objects_signature(scenario);

  // Matched bound: same tick grid and crisp gate the filters see.
  for (int o = 0; o < 2; ++o) {
    const auto& obj = scenario.object(ids[o]);
    const InformationAccount acc =
        accumulate_fim(trajectories, ids[o], obj.position, obj.prior, ticks,
                       scenario.noise_var_az, scenario.noise_var_el, VisibilityModel::crisp);
    summary.objects[o].root_pcrlb = pcrlb_trace(acc).root_trace;
  }

  std::vector<TrialReport> trials(n_trials);
  const double noise_std_az = std::sqrt(scenario.noise_var_az);
  const double noise_std_el = std::sqrt(scenario.noise_var_el);

  parallel_for(static_cast<std::size_t>(n_trials), [&](std::size_t trial) {
    TrialReport& report = trials[trial];
    report.seed = derive_seed(master_seed, rng_stream::kTrial, trial);

    // Common cueing draw per object, shared by all UAVs.
    auto prior_rng = make_rng(report.seed, rng_stream::kPriorDraw, 0);
    std::array<Eigen::Vector2d, 2> prior_means;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int o = 0; o < 2; ++o) {
      const auto& obj = scenario.object(ids[o]);
      const Eigen::LLT<Eigen::Matrix2d> llt(obj.prior.covariance);
      const Eigen::Vector2d draw(gauss(prior_rng), gauss(prior_rng));
      prior_means[o] = obj.position.head<2>() + llt.matrixL() * draw;
    }

    // lambda_i-weighted priors: local covariance N * P0 so fused shares
    // reconstruct exactly one prior.
    std::vector<std::array<LocalFilterState, 2>> filters(n_uav);
    for (int i = 0; i < n_uav; ++i) {
      for (int o = 0; o < 2; ++o) {
        filters[i][o].mean = prior_means[o];
        filters[i][o].covariance = static_cast<double>(n_uav) * scenario.object(ids[o]).prior.covariance;
        filters[i][o].object_id = ids[o];
        filters[i][o].uav_id = i;
      }
    }

    auto meas_rng = make_rng(report.seed, rng_stream::kMeasurement, 0);
    for (std::size_t tick = 0; tick < ticks.size(); ++tick) {
      const double t = ticks[tick];
      for (int i = 0; i < n_uav; ++i) {
        const UavState st = trajectories[i].state_at(t);
        const double roll = trajectories[i].control_at(t).roll;
        for (int o = 0; o < 2; ++o) {
          if (tick > 0) filters[i][o] = ekf_predict(filters[i][o], scenario.process_var);
          const auto obs = synthesize_measurement(
              scenario.object(ids[o]).position, st, roll, trajectories[i].spec.mount,
              trajectories[i].spec.fov, noise_std_az, noise_std_el, meas_rng, t);
          if (obs) filters[i][o] = ekf_update(filters[i][o], *obs, scenario.object(ids[o]).position.z()).first;
        }
      }
    }

    for (int o = 0; o < 2; ++o) {
      std::vector<LocalFilterState> locals;
      locals.reserve(n_uav);
      for (int i = 0; i < n_uav; ++i) locals.push_back(filters[i][o]);
      const FusedEstimate fused = fuse_federated(locals);
      report.fused_mean[o] = fused.mean;
      report.error_vec[o] = fused.mean - Eigen::Vector2d(scenario.object(ids[o]).position.head<2>());
      report.terminal_error[o] = report.error_vec[o].norm();
    }
  });

  for (int o = 0; o < 2; ++o) {
    std::vector<Eigen::Vector2d> errs(n_trials);
    for (int trial = 0; trial < n_trials; ++trial) errs[trial] = trials[trial].error_vec[o];
    const double bound = summary.objects[o].root_pcrlb;
    summary.objects[o] = validation_detail::object_stats(errs);
    summary.objects[o].root_pcrlb = bound;
  }
  std::vector<double> combined(n_trials);
  for (int trial = 0; trial < n_trials; ++trial) {
    combined[trial] = std::sqrt(0.5 * (trials[trial].error_vec[0].squaredNorm() +
                                       trials[trial].error_vec[1].squaredNorm()));
  }
  summary.combined = validation_detail::make_histogram(combined);
  if (keep_trials) summary.trials = std::move(trials);
  return summary;
}

struct CampaignComparison {
  std::array<double, 2> sd_ratio{};          // a/b per object
  std::array<double, 2> rmse_ratio{};
  std::array<double, 2> root_pcrlb_ratio{};
  std::array<double, 2> p95_ratio{};
  bool a_dominates = false;  // every target-object ratio <= 1
};

inline CampaignComparison compare_campaigns(const CampaignSummary& a, const CampaignSummary& b) {
  if (a.objects_signature != b.objects_signature)
    throw ConfigError("compare_campaigns: campaigns cover different scenario objects");
  CampaignComparison cmp;
  for (int o = 0; o < 2; ++o) {
    cmp.sd_ratio[o] = a.objects[o].sd / b.objects[o].sd;
    cmp.rmse_ratio[o] = a.objects[o].rmse / b.objects[o].rmse;
    cmp.root_pcrlb_ratio[o] = a.objects[o].root_pcrlb / b.objects[o].root_pcrlb;
    cmp.p95_ratio[o] = a.objects[o].p95 / b.objects[o].p95;
  }
  cmp.a_dominates = cmp.sd_ratio[0] <= 1.0 && cmp.rmse_ratio[0] <= 1.0 &&
                    cmp.root_pcrlb_ratio[0] <= 1.0;
  return cmp;
}

struct CertificateReport {
  double nfz_worst = std::numeric_limits<double>::infinity();   // min dist - r_nfz, m
  double box_worst = std::numeric_limits<double>::infinity();   // min box margin, m
  double roll_worst = std::numeric_limits<double>::infinity();  // min bound margin, rad
  bool passed = false;
};

// Independent dense-sampling re-check of the geometric constraints with
// crisp inequalities: hull-based enforcement must dominate a 2000-point
// sweep up to 0.5 m on distances and 1e-3 rad on roll.
inline CertificateReport certify_constraints(const Scenario& scenario,
                                             const std::vector<PlatformTrajectory>& trajectories,
                                             int samples = 2000) {
  CertificateReport cert;
  const auto& cs = scenario.constraints;
  for (const auto& traj : trajectories) {
    const double t_f = traj.final_time();
    for (int s = 0; s <= samples; ++s) {
      const double t = t_f * s / samples;
      const UavState st = traj.state_at(t);
      const double nfz =
          (Eigen::Vector2d(st.x, st.y) - cs.nfz_center).norm() - cs.nfz_radius;
      cert.nfz_worst = std::min(cert.nfz_worst, nfz);
      const double box = std::min(
          std::min(st.x - cs.mission_box.x_min, cs.mission_box.x_max - st.x),
          std::min(st.y - cs.mission_box.y_min, cs.mission_box.y_max - st.y));
      cert.box_worst = std::min(cert.box_worst, box);
      const double roll = traj.control_at(t).roll;
      const auto& vp = traj.spec.params;
      cert.roll_worst = std::min(cert.roll_worst,
                                 std::min(vp.roll_max - roll, roll - vp.roll_min));
    }
  }
  cert.passed = cert.nfz_worst >= -0.5 && cert.box_worst >= -0.5 && cert.roll_worst >= -1e-3;
  return cert;
}

}  // namespace bearline
