#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "fsd/grid.hpp"

namespace fsd {

/// sRGB in [0, 1] to CIELAB (D65 white point), per pixel.
Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& rgb);
Eigen::Vector3d lab_to_rgb(const Eigen::Vector3d& lab);
Image rgb_to_lab(const Image& rgb);
Image lab_to_rgb(const Image& lab);

struct PixelFeature {
  Eigen::Vector3d lab = Eigen::Vector3d::Zero();
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();  // (column, row)
  double depth = 0.0;
};

struct SlicParams {
  int step = 16;
  double lambda_lab = 0.1;
  double lambda_d = 0.2;         // per meter
  double lambda_pix = 1.0 / 16;  // per pixel; 1/step for the default step
  int max_iter = 10;
  // Scan every center for every pixel instead of the 2*step window.
  bool exhaustive = false;

  void validate() const;
};

/// lambda_lab * |lab_a - lab_b| + lambda_d * |d_a - d_b| + lambda_pix * |xy_a - xy_b|
double slic_distance(const PixelFeature& a, const PixelFeature& b, const SlicParams& p);

PixelFeature pixel_feature(const Image& lab, const DepthMap& depth, int row, int col);

struct Cluster {
  PixelFeature center;
  std::size_t count = 0;
};

struct SegmentLabels {
  LabelMap labels;
  std::vector<Cluster> clusters;
  /// Sum over pixels of the distance to the assigned center, recorded after
  /// each assignment step.
  std::vector<double> objective_history;

  int size() const noexcept { return static_cast<int>(clusters.size()); }
};

/// Centers on a regular grid with spacing close to `step`; each samples the
/// feature of the pixel nearest to it.
std::vector<PixelFeature> initial_centers(const Image& lab, const DepthMap& depth,
                                          const SlicParams& p);

/// Label every pixel with its nearest center (ties go to the lowest index).
/// The windowed mode is exact: it only skips centers farther than 2*step,
/// whose cost is bounded below by lambda_pix * 2 * step, and falls back to a
/// full scan when the window's best does not beat that bound.
LabelMap assign_pixels(const Image& lab, const DepthMap& depth,
                       std::span<const PixelFeature> centers, const SlicParams& p,
                       double* objective = nullptr);

/// Mean feature of each label's members; clusters without members keep
/// count == 0 and a zero center.
std::vector<Cluster> update_centers(const Image& lab, const DepthMap& depth,
                                    const LabelMap& labels, int n_centers);

double segmentation_objective(const Image& lab, const DepthMap& depth, const LabelMap& labels,
                              std::span<const Cluster> clusters, const SlicParams& p);

/// Depth-aware SLIC. Throws kImageTooSmall when step > min(rows, cols) and
/// kShapeMismatch / kNonPositiveDepth on bad inputs.
SegmentLabels segment(const Image& lab, const DepthMap& depth, const SlicParams& p);

}  // namespace fsd
