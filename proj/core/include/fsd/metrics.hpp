#pragma once

#include <cstddef>
#include <span>

#include "fsd/grid.hpp"

namespace fsd {

struct DepthEvalResult {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t n_pixels = 0;
};

struct EvalConfig {
  bool use_median_scaling = false;
  double min_depth = 1e-3;
  double max_depth = 80.0;
  /// Restrict evaluation to the standard Eigen-split crop of KITTI frames.
  bool eigen_crop = false;

  void validate() const;
};

/// Pixels that take part in evaluation: mask != 0 (an empty mask permits all),
/// gt inside [min_depth, max_depth], pred finite and > 0, and inside the
/// Eigen crop when enabled.
Mask evaluation_mask(const DepthMap& pred, const DepthMap& gt, const Mask& mask,
                     const EvalConfig& cfg);

struct MedianScaled {
  DepthMap pred;
  double factor = 1.0;
};

/// factor = median(gt) / median(pred) over valid pixels (mask != 0, gt > 0,
/// pred > 0); the whole prediction is multiplied by it. Throws
/// kNoValidPixels.
MedianScaled median_scale(const DepthMap& pred, const DepthMap& gt, const Mask& valid);

/// Standard error and accuracy metrics. Throws kShapeMismatch or
/// kNoValidPixels.
DepthEvalResult evaluate(const DepthMap& pred, const DepthMap& gt, const Mask& mask,
                         const EvalConfig& cfg = {});

/// Pixel-count weighted mean of every metric. Throws kEmptyList.
DepthEvalResult aggregate(std::span<const DepthEvalResult> results);

/// Pairwise (cascade) summation; the result does not depend on thread count
/// or reduction order outside this function.
double pairwise_sum(std::span<const double> values);

}  // namespace fsd
