#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "fsd/grid.hpp"
#include "fsd/slic3d.hpp"

namespace fsd {

/// Weights of the segment-level objective
///   sum_k [ lambda0 * consistency_k + lambda1_k * (lg_tar_k - lg_k)^2
///           + lambda2 * (lg_k - lg0_k)^2 ],
/// with lambda1_k = lambda1 for segments holding VO points and 0 otherwise.
struct FusionWeights {
  double lambda0 = 0.1;  // inter-segment consistency
  double lambda1 = 1.0;  // visual-odometry target
  double lambda2 = 1.0;  // network prior

  void validate() const;
};

/// One sparse visual-odometry observation at an integer pixel.
struct VoPoint {
  int u = 0;  // column
  int v = 0;  // row
  double depth = 0.0;
};

struct SparseDepthMap {
  std::vector<VoPoint> points;

  bool empty() const noexcept { return points.empty(); }
  std::size_t size() const noexcept { return points.size(); }
};

struct SegmentSummary {
  double lg0 = 0.0;     // mean network log-depth over the segment
  double lg_tar = 0.0;  // VO-aligned target; meaningful only when has_vo
  bool has_vo = false;
  int vo_count = 0;
};

/// Elementwise natural log. Throws kNonPositiveDepth on depth <= 0.
Grid<double> log_depth(const DepthMap& depth);

/// Closed-form per-segment log-scale: mean of (lg_vo - lg_net) over the
/// segment's VO points. Throws kNoVoPoints on empty input.
double inner_scale(std::span<const double> lg_net_at_vo, std::span<const double> lg_vo);

/// Per-segment mean log-depth and VO target lg_tar = lg0 + inner_scale.
/// Throws kOutOfBounds for VO points outside the label map.
std::vector<SegmentSummary> summarize_segments(const LabelMap& labels, int n_segments,
                                               const Grid<double>& lg_net,
                                               const SparseDepthMap& vo);

/// Dense KKT system A * lg = B of the segment-level objective.
struct OuterSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};
OuterSystem build_outer_system(std::span<const SegmentSummary> summaries,
                               const FusionWeights& w);

/// O(N) solve of the KKT system. A = diag(N*lambda0 + lambda1_k + lambda2)
/// - lambda0 * 1 1^T is inverted with the Sherman-Morrison identity, applied
/// to the correction lg - lg0 so a zero right-hand side yields lg0 exactly.
/// Throws kSingularSystem when the system has no unique solution.
std::vector<double> solve_outer(std::span<const SegmentSummary> summaries,
                                const FusionWeights& w);

/// Reference route: LU factorization of the dense system.
std::vector<double> solve_outer_dense(std::span<const SegmentSummary> summaries,
                                      const FusionWeights& w);

/// Segment-level objective. The consistency sum runs over unordered pairs,
/// which is the normalization whose stationarity conditions are the KKT rows.
double outer_objective(std::span<const double> lg, std::span<const SegmentSummary> summaries,
                       const FusionWeights& w);

/// lg_i = lg_net_i + (lg_seg_k - lg0_k) for every pixel i of segment k.
Grid<double> apply_segment_correction(const Grid<double>& lg_net, const LabelMap& labels,
                                      std::span<const double> lg_seg,
                                      std::span<const double> lg0);

inline constexpr std::size_t kMaxOraclePixels = 256;

/// Pixel-level objective over ordered pixel pairs:
///   lambda0 * sum_ij ((lg_net_i - lg_net_j) - (lg_i - lg_j))^2
///   + lambda1 * sum_{VO points} (log d_vo - lg_i)^2.
double pixelwise_objective(const Grid<double>& lg, const Grid<double>& lg_net,
                           const SparseDepthMap& vo, const FusionWeights& w);

/// Minimizes pixelwise_objective by conjugate gradients. Without VO points
/// the objective only fixes depth up to a global shift; the shift is pinned
/// so the mean log-depth matches lg_net. Throws kTooLarge above
/// kMaxOraclePixels.
Grid<double> pixelwise_oracle(const Grid<double>& lg_net, const SparseDepthMap& vo,
                              const FusionWeights& w);

struct FusionOptions {
  SlicParams slic;
  FusionWeights weights;
  double d_min = 0.1;
  double d_max = 100.0;
};

struct FusionResult {
  DepthMap depth;
  SegmentLabels segments;
  std::vector<SegmentSummary> summaries;
  std::vector<double> lg_seg;
  double segment_seconds = 0.0;
  double optimize_seconds = 0.0;
};

/// Post-optimization on an existing segmentation. Output depth is the network
/// depth scaled per segment by exp(lg_seg_k - lg0_k), clamped to
/// [d_min, d_max]. With no VO points the network depth is returned unchanged.
FusionResult fuse_segments(const DepthMap& net_depth, SegmentLabels segments,
                           const SparseDepthMap& vo, const FusionWeights& w, double d_min,
                           double d_max);

/// Segment `rgb` with depth-aware SLIC, then fuse_segments.
FusionResult fuse(const Image& rgb, const DepthMap& net_depth, const SparseDepthMap& vo,
                  const FusionOptions& options);

}  // namespace fsd
