#include "fsd/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "fsd/error.hpp"
#include "fsd/parallel.hpp"

namespace fsd {
namespace {

constexpr double kBorderTolerance = 1e-6;

}  // namespace

void CameraIntrinsics::validate() const {
  std::ostringstream why;
  if (!(fx > 0.0) || !(fy > 0.0)) why << "focal lengths must be positive; ";
  if (width <= 0 || height <= 0) why << "image size must be positive; ";
  if (!(cx >= 0.0 && cx < width)) why << "cx outside [0, width); ";
  if (!(cy >= 0.0 && cy < height)) why << "cy outside [0, height); ";
  if (!why.str().empty()) throw Error(ErrorCode::kInvalidArgument, "intrinsics: " + why.str());
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::inverse_matrix() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Vector3d CameraIntrinsics::back_project(const Eigen::Vector2d& pixel, double depth) const {
  return {(pixel.x() - cx) / fx * depth, (pixel.y() - cy) / fy * depth, depth};
}

Eigen::Vector2d CameraIntrinsics::project(const Eigen::Vector3d& point) const {
  return {fx * point.x() / point.z() + cx, fy * point.y() / point.z() + cy};
}

void RelativePose::validate(double tolerance) const {
  const double ortho = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  const double det = rotation.determinant();
  if (ortho > tolerance || std::abs(det - 1.0) > tolerance || !translation.allFinite()) {
    std::ostringstream msg;
    msg << "pose rotation is not a proper rotation (|RR^T - I| = " << ortho
        << ", det = " << det << ")";
    throw Error(ErrorCode::kNotARotation, msg.str());
  }
}

RelativePose RelativePose::inverse() const {
  RelativePose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RelativePose compose(const RelativePose& a, const RelativePose& b) {
  RelativePose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RelativePose relative_pose(const RelativePose& p1, const RelativePose& p2) {
  return compose(p1.inverse(), p2);
}

bool project_to_rotation(const Eigen::Matrix3d& m, Eigen::Matrix3d& rotation) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) return false;
  rotation = r;
  return true;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

FundamentalMatrix fundamental_from_pose(const CameraIntrinsics& k, const RelativePose& pose) {
  if (pose.translation.norm() < 1e-12) {
    throw Error(ErrorCode::kZeroBaseline, "fundamental matrix undefined for zero translation");
  }
  const Eigen::Matrix3d k_inv = k.inverse_matrix();
  return {k_inv.transpose() * skew(pose.translation) * pose.rotation * k_inv};
}

EpipolarLine epipolar_line(const FundamentalMatrix& f, const Eigen::Vector2d& p) {
  return {f.matrix * Eigen::Vector3d(p.x(), p.y(), 1.0)};
}

double point_line_distance(const EpipolarLine& line, const Eigen::Vector2d& q) {
  const auto& l = line.coeffs;
  const double norm_sq = l[0] * l[0] + l[1] * l[1];
  if (norm_sq < 1e-20) throw Error(ErrorCode::kDegenerateLine, "line normal is zero");
  return std::abs(l[0] * q.x() + l[1] * q.y() + l[2]) / std::sqrt(norm_sq);
}

bool sample_bilinear(const Image& image, double x, double y, std::span<double> out) {
  const double max_x = image.cols() - 1;
  const double max_y = image.rows() - 1;
  const bool inside = x >= -kBorderTolerance && x <= max_x + kBorderTolerance &&
                      y >= -kBorderTolerance && y <= max_y + kBorderTolerance;
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.cols() - 1);
  const int y1 = std::min(y0 + 1, image.rows() - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  const auto p00 = image.pixel(y0, x0);
  const auto p01 = image.pixel(y0, x1);
  const auto p10 = image.pixel(y1, x0);
  const auto p11 = image.pixel(y1, x1);
  for (int ch = 0; ch < image.channels(); ++ch) {
    const double top = (1.0 - ax) * p00[ch] + ax * p01[ch];
    const double bottom = (1.0 - ax) * p10[ch] + ax * p11[ch];
    out[ch] = (1.0 - ay) * top + ay * bottom;
  }
  return inside;
}

WarpResult warp_depth_to_source(const DepthMap& depth, const CameraIntrinsics& k,
                                const RelativePose& pose, const Image& source) {
  if (!depth.same_shape(source)) {
    throw Error(ErrorCode::kShapeMismatch, "depth and source image sizes differ");
  }
  WarpResult result{Image(depth.rows(), depth.cols(), source.channels()),
                    Mask(depth.rows(), depth.cols(), 1, 0)};
  parallel_for(0, depth.rows(), [&](int r) {
    for (int c = 0; c < depth.cols(); ++c) {
      const double d = depth(r, c);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      const Eigen::Vector3d p_src = pose.transform(k.back_project({c, r}, d));
      if (!(p_src.z() > 0.0)) continue;
      const Eigen::Vector2d uv = k.project(p_src);
      const bool ok = sample_bilinear(source, uv.x(), uv.y(), result.image.pixel(r, c));
      result.valid(r, c) = ok ? 1 : 0;
    }
  });
  return result;
}

RelativePose flip_pose_horizontal(const RelativePose& pose) {
  const Eigen::Matrix3d mirror = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  RelativePose out;
  out.rotation = mirror * pose.rotation * mirror;
  out.translation = mirror * pose.translation;
  return out;
}

}  // namespace fsd
