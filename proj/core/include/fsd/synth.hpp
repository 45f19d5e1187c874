#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "fsd/flow_mask.hpp"
#include "fsd/fusion.hpp"
#include "fsd/geometry.hpp"
#include "fsd/grid.hpp"

namespace fsd {

/// Half-open pixel rectangle [x0, x1) x [y0, y1) in base-frame pixels.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  /// Continuous test; pixel c covers [c - 0.5, c + 0.5).
  bool contains(double x, double y) const noexcept {
    return x >= x0 - 0.5 && x < x1 - 0.5 && y >= y0 - 0.5 && y < y1 - 0.5;
  }
};

struct Texture {
  enum class Kind { kSolid, kChecker, kGradient };
  Kind kind = Kind::kSolid;
  Eigen::Vector3d color_a = Eigen::Vector3d::Constant(0.5);
  Eigen::Vector3d color_b = Eigen::Vector3d::Constant(0.5);
  double period_px = 8.0;  // checker cell size or gradient wavelength

  /// Color at continuous base-frame pixel coordinates.
  Eigen::Vector3d at(double x, double y) const;
};

/// Fronto-parallel textured plane covering `rect` in the base frame.
struct PlaneRegion {
  PixelRect rect;
  double depth = 10.0;
  Texture texture;
  /// Multiplier applied to the truth to fake a network prediction.
  double scale_factor = 1.0;
};

/// Pixels that move independently of the camera by `motion_px`.
struct DynamicRegion {
  PixelRect rect;
  Eigen::Vector2d motion_px = Eigen::Vector2d::Zero();
};

struct NoiseSpec {
  double vo_sigma = 0.0;    // relative log-normal noise on VO depth
  double vo_dropout = 0.0;  // probability of discarding a sampled VO point
  int vo_samples = 2000;    // candidate VO pixels drawn before dropout
  double texture_noise = 0.0;
};

struct SceneSpec {
  CameraIntrinsics camera;
  RelativePose motion;  // base frame -> source frame
  PlaneRegion background;
  std::vector<PlaneRegion> layout;  // later entries are painted over earlier ones
  std::vector<DynamicRegion> dynamic_regions;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  double d_min = 0.1;
  double d_max = 100.0;

  /// Throws kInvalidSpec.
  void validate() const;
};

struct RenderedScene {
  Image image_a;  // base frame
  Image image_b;  // source frame
  DepthMap depth;
  FlowField flow;
  LabelMap region;  // layout index per pixel; layout.size() marks background
  Mask dynamic;
};

/// Deterministic for a fixed SceneSpec (including seed). Static flow is the exact
/// reprojection displacement; dynamic regions add their own motion.
RenderedScene render(const SceneSpec& spec);

struct CorruptedDepth {
  DepthMap net_depth;
  SparseDepthMap vo;
};

/// Fake network depth (truth times the region's scale factor) and VO points
/// sampled uniformly over static pixels with log-normal noise and dropout.
CorruptedDepth corrupt(const RenderedScene& scene, const SceneSpec& spec);

/// KITTI-like 192x640 frame: four textured quadrants at distinct depths with
/// per-quadrant scale corruption, one dynamic box and forward camera motion.
SceneSpec standard_scene(std::uint64_t seed = 7);

}  // namespace fsd
