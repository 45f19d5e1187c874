#pragma once

#include <Eigen/Core>

#include "fsd/grid.hpp"

namespace fsd {

/// Pinhole intrinsics. Pixel coordinates have u to the right, v downward and
/// the origin at the center of the top-left pixel.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws Error(kInvalidArgument) when the invariants do not hold.
  void validate() const;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse_matrix() const;

  Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double depth) const;
  /// Caller guarantees point.z() > 0.
  Eigen::Vector2d project(const Eigen::Vector3d& point) const;
};

/// Rigid transform from frame A into frame B: X_b = rotation * X_a + translation.
struct RelativePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RelativePose identity() { return {}; }

  void validate(double tolerance = 1e-9) const;
  RelativePose inverse() const;
  Eigen::Vector3d transform(const Eigen::Vector3d& point) const {
    return rotation * point + translation;
  }
};

/// a * b applies b first.
RelativePose compose(const RelativePose& a, const RelativePose& b);

/// inv(p1) * p2 for absolute camera-to-world poses p1, p2: maps coordinates
/// in frame 2 into frame 1.
RelativePose relative_pose(const RelativePose& p1, const RelativePose& p2);

/// Nearest proper rotation in the Frobenius sense (SVD projection). Returns
/// false when the closest orthogonal matrix is a reflection.
bool project_to_rotation(const Eigen::Matrix3d& m, Eigen::Matrix3d& rotation);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

struct FundamentalMatrix {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
};

/// Line l0*x + l1*y + l2 = 0 in the second image.
struct EpipolarLine {
  Eigen::Vector3d coeffs = Eigen::Vector3d::Zero();
};

/// F = K^-T [t]x R K^-1, so that p_b^T F p_a = 0 for static points.
/// Throws kZeroBaseline when |t| < 1e-12.
FundamentalMatrix fundamental_from_pose(const CameraIntrinsics& k, const RelativePose& pose);

EpipolarLine epipolar_line(const FundamentalMatrix& f, const Eigen::Vector2d& p);

/// |L . [q, 1]| / sqrt(L0^2 + L1^2). Throws kDegenerateLine when the normal
/// vanishes.
double point_line_distance(const EpipolarLine& line, const Eigen::Vector2d& q);

/// Bilinear lookup. Returns false (and writes the clamped sample) when the
/// coordinate falls outside [0, cols-1] x [0, rows-1] by more than a rounding
/// tolerance.
bool sample_bilinear(const Image& image, double x, double y, std::span<double> out);

struct WarpResult {
  Image image;
  Mask valid;
};

/// Reconstruct the target view by sampling `source` at the reprojection of
/// every target pixel. `depth` lives in the target frame and `pose` maps
/// target coordinates into the source frame.
WarpResult warp_depth_to_source(const DepthMap& depth, const CameraIntrinsics& k,
                                const RelativePose& pose, const Image& source);

/// Conjugation by diag(-1, 1, 1): the pose seen by horizontally mirrored images.
RelativePose flip_pose_horizontal(const RelativePose& pose);

}  // namespace fsd
