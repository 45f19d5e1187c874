#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <limits>

#include "fsd/flow_mask.hpp"
#include "test_util.hpp"

namespace fsd {
namespace {

const CameraIntrinsics kCam{200.0, 200.0, 31.5, 23.5, 64, 48};

// Flow of a fronto-parallel plane at depth d under `pose`.
FlowField plane_flow(const RelativePose& pose, double d) {
  FlowField flow(kCam.height, kCam.width, 2);
  for (int r = 0; r < kCam.height; ++r) {
    for (int c = 0; c < kCam.width; ++c) {
      const Eigen::Vector2d p(c, r);
      const Eigen::Vector2d q = kCam.project(pose.transform(kCam.back_project(p, d)));
      flow(r, c, 0) = q.x() - c;
      flow(r, c, 1) = q.y() - r;
    }
  }
  return flow;
}

TEST(Deviation, RigidFlowLiesOnEpipolarLines) {
  RelativePose pose;
  pose.rotation = Eigen::AngleAxisd(0.02, Eigen::Vector3d::UnitY()).toRotationMatrix();
  pose.translation = Eigen::Vector3d(0.1, 0.02, -0.5);
  const auto dev = epipolar_deviation(plane_flow(pose, 12.0), fundamental_from_pose(kCam, pose));
  for (double v : dev.values()) EXPECT_LT(v, 1e-8);
}

TEST(Deviation, VerticalOffsetUnderLateralMotionIsItsMagnitude) {
  RelativePose pose;
  pose.translation = Eigen::Vector3d(0.3, 0.0, 0.0);
  FlowField flow = plane_flow(pose, 10.0);
  for (int r = 0; r < kCam.height; ++r) {
    for (int c = 0; c < kCam.width; ++c) flow(r, c, 1) += 20.0;
  }
  const auto dev = epipolar_deviation(flow, fundamental_from_pose(kCam, pose));
  for (double v : dev.values()) EXPECT_NEAR(v, 20.0, 1e-9);
}

TEST(Deviation, DegeneratePixelIsInfinite) {
  // Pure forward motion: the epipole is the principal point.
  RelativePose pose;
  pose.translation = Eigen::Vector3d(0.0, 0.0, 1.0);
  FlowField flow(3, 3, 2);
  const CameraIntrinsics k{100.0, 100.0, 1.0, 1.0, 3, 3};
  const auto dev = epipolar_deviation(flow, fundamental_from_pose(k, pose));
  EXPECT_TRUE(std::isinf(dev(1, 1)));
  EXPECT_TRUE(std::isfinite(dev(0, 0)));
}

TEST(Deviation, RequiresTwoChannels) {
  RelativePose pose;
  pose.translation = Eigen::Vector3d(1.0, 0.0, 0.0);
  EXPECT_FSD_ERROR(epipolar_deviation(Grid<double>(2, 2, 1), fundamental_from_pose(kCam, pose)),
                   ErrorCode::kChannelMismatch);
}

TEST(Mask, ThresholdBoundaryCountsAsStatic) {
  Grid<double> dev(1, 4);
  dev(0, 0) = 0.0;
  dev(0, 1) = 10.0;
  dev(0, 2) = std::nextafter(10.0, 11.0);
  dev(0, 3) = std::numeric_limits<double>::infinity();
  const auto m = build_static_mask(dev);
  EXPECT_EQ(m(0, 0), 1);
  EXPECT_EQ(m(0, 1), 1);
  EXPECT_EQ(m(0, 2), 0);
  EXPECT_EQ(m(0, 3), 0);
  EXPECT_EQ(kDefaultMaskThresholdPx, 10.0);
}

TEST(Mask, NanDeviationIsDynamic) {
  Grid<double> dev(1, 1, 1, std::numeric_limits<double>::quiet_NaN());
  EXPECT_EQ(build_static_mask(dev)(0, 0), 0);
}

TEST(Mask, RejectsNonPositiveThreshold) {
  EXPECT_FSD_ERROR(build_static_mask(Grid<double>(1, 1), 0.0), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace fsd
