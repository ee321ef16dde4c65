#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "bearline/sensor.hpp"

using namespace bearline;

TEST(RelativePosition, Subtraction) {
  const Eigen::Vector3d a = relative_position({0, 0, -50}, {100, 0, 0});
  EXPECT_EQ(a, Eigen::Vector3d(100, 0, 50));
  EXPECT_EQ(relative_position({1, 2, 3}, {1, 2, 3}), Eigen::Vector3d::Zero());
  const Eigen::Vector3d b = relative_position({10, 20, -50}, {110, 20, 0});
  EXPECT_EQ(b, Eigen::Vector3d(100, 0, 50));
}

TEST(ToCameraFrame, IdentityAndYaw) {
  CameraMount mount;
  mount.boresight_azimuth = 0.0;
  const Eigen::Vector3d same = to_camera_frame({100, 0, 0}, 0.0, 0.0, 0.0, mount);
  EXPECT_NEAR((same - Eigen::Vector3d(100, 0, 0)).norm(), 0.0, 1e-12);

  // Heading east: an easterly offset appears straight ahead.
  const Eigen::Vector3d ahead = to_camera_frame({0, 100, 0}, kPi / 2, 0.0, 0.0, mount);
  EXPECT_NEAR(ahead.x(), 100.0, 1e-9);
  EXPECT_NEAR(ahead.y(), 0.0, 1e-9);
  EXPECT_NEAR(ahead.z(), 0.0, 1e-9);
}

TEST(ToCameraFrame, BoresightPointsCameraRight) {
  CameraMount mount;
  mount.boresight_azimuth = kPi / 4;
  // Object 45 degrees to the right of the nose lands on the camera axis.
  const Eigen::Vector3d v =
      to_camera_frame({100.0 / std::sqrt(2.0), 100.0 / std::sqrt(2.0), 0.0}, 0.0, 0.0, 0.0, mount);
  EXPECT_NEAR(v.x(), 100.0, 1e-9);
  EXPECT_NEAR(v.y(), 0.0, 1e-9);
}

TEST(ToCameraFrame, RotationsAreIsometries) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  std::uniform_real_distribution<double> coord(-500.0, 500.0);
  CameraMount gimbal;
  gimbal.kind = MountKind::gimballed;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector3d rel(coord(rng), coord(rng), coord(rng));
    const Eigen::Vector3d out =
        to_camera_frame(rel, ang(rng), 0.0, ang(rng), gimbal, ang(rng), ang(rng));
    EXPECT_NEAR(out.norm(), rel.norm(), 1e-12 * std::max(1.0, rel.norm()));
  }
}

TEST(ToCameraFrame, RoundTripViaTranspose) {
  // Build the full rotation matrix column by column; its transpose must
  // recover the inertial vector.
  CameraMount gimbal;
  gimbal.kind = MountKind::gimballed;
  const double heading = 0.8, roll = -0.35, gaz = 0.5, gel = 0.4;
  Eigen::Matrix3d rot;
  for (int c = 0; c < 3; ++c) {
    rot.col(c) = to_camera_frame(Eigen::Vector3d::Unit(c), heading, 0.0, roll, gimbal, gaz, gel);
  }
  EXPECT_NEAR((rot * rot.transpose() - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-12);
  const Eigen::Vector3d v(120.0, -44.0, 60.0);
  const Eigen::Vector3d cam = to_camera_frame(v, heading, 0.0, roll, gimbal, gaz, gel);
  EXPECT_NEAR((rot.transpose() * cam - v).norm(), 0.0, 1e-9);
}

TEST(BearingAngles, HandValues) {
  const auto [az1, el1] = bearing_angles({100, 0, 50});
  EXPECT_NEAR(az1, 0.0, 1e-12);
  EXPECT_NEAR(el1, std::atan(0.5), 1e-12);
  EXPECT_NEAR(el1, 0.46365, 1e-5);

  const auto [az2, el2] = bearing_angles({0, 100, 0});
  EXPECT_NEAR(az2, kPi / 2, 1e-12);
  EXPECT_NEAR(el2, 0.0, 1e-12);

  const auto [az3, el3] = bearing_angles({100, 100, 0});
  EXPECT_NEAR(az3, kPi / 4, 1e-12);
}

TEST(BearingAngles, VerticalSingularity) {
  EXPECT_THROW(bearing_angles({0, 0, 50}), SingularityError);
  EXPECT_THROW(bearing_angles({0, 0, 0}), SingularityError);
}

TEST(SigmoidIndicator, LimitAndHandValue) {
  EXPECT_DOUBLE_EQ(sigmoid_indicator(0.7, 0.7, 20.0, FovSide::upper), 0.5);
  EXPECT_DOUBLE_EQ(sigmoid_indicator(0.7, 0.7, 20.0, FovSide::lower), 0.5);
  // 1 / (1 + e^{-10})
  EXPECT_NEAR(sigmoid_indicator(0.2, 0.7, 20.0, FovSide::upper), 0.9999546, 1e-7);
  EXPECT_LT(sigmoid_indicator(100.0, 0.7, 20.0, FovSide::upper), 1e-12);
  EXPECT_THROW(sigmoid_indicator(0.0, 0.0, -1.0, FovSide::upper), DomainError);
}

TEST(FovVisibility, CenterAndEdge) {
  FovSpec fov;  // defaults: az [-pi/4, pi/4], el [0.2, 1.2], k = 50
  EXPECT_NEAR(fov.az_min, -kPi / 4, 1e-12);
  EXPECT_NEAR(fov.az_max, kPi / 4, 1e-12);

  const double center_el = 0.5 * (fov.el_min + fov.el_max);
  EXPECT_GT(fov_visibility(0.0, center_el, fov), 0.999);
  EXPECT_NEAR(fov_visibility(fov.az_max, center_el, fov), 0.5, 0.01);
}

TEST(FovVisibility, MonotoneAndSymmetric) {
  FovSpec fov;
  const double el = 0.7;
  double prev = fov_visibility(0.0, el, fov);
  for (int i = 1; i <= 40; ++i) {
    const double az = 0.05 * i;
    const double v = fov_visibility(az, el, fov);
    EXPECT_LE(v, prev + 1e-15);
    EXPECT_NEAR(v, fov_visibility(-az, el, fov), 1e-15);
    prev = v;
  }
}

TEST(FovVisibility, OpenUnitInterval) {
  FovSpec fov;
  for (double az = -kPi; az <= kPi + 1e-9; az += kPi / 16) {
    for (double el = -kPi / 2 + 0.01; el <= kPi / 2; el += kPi / 16) {
      const double v = fov_visibility(az, el, fov);
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(FovVisibility, AnalyticGradientMatchesFiniteDifferences) {
  FovSpec fov;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uaz(-1.2, 1.2);
  std::uniform_real_distribution<double> uel(-0.3, 1.6);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const double az = uaz(rng), el = uel(rng);
    const Eigen::Vector2d grad = fov_visibility_grad(az, el, fov);
    const double fd_az = (fov_visibility(az + h, el, fov) - fov_visibility(az - h, el, fov)) / (2 * h);
    const double fd_el = (fov_visibility(az, el + h, fov) - fov_visibility(az, el - h, fov)) / (2 * h);
    // The oracle's own noise floor: eps * |f| / (2h) plus h^2 truncation.
    const double fd_noise = 1e-9;
    EXPECT_NEAR(grad.x(), fd_az, 1e-6 * std::abs(fd_az) + fd_noise);
    EXPECT_NEAR(grad.y(), fd_el, 1e-6 * std::abs(fd_el) + fd_noise);
  }
}

TEST(CrispGate, MatchesSmoothAtHalf) {
  FovSpec fov;
  EXPECT_TRUE(crisp_in_fov(0.0, 0.7, fov));
  EXPECT_FALSE(crisp_in_fov(0.8, 0.7, fov));
  EXPECT_FALSE(crisp_in_fov(0.0, 0.1, fov));
}

TEST(WrapAngle, HalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(0.3), 0.3, 1e-15);
}
