#pragma once

#include "fsd/grid.hpp"

namespace fsd {

struct PhotometricWeights {
  double alpha = 0.85;  // SSIM term
  double beta = 0.15;   // L1 term
};

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Per-pixel SSIM over 3x3 windows (reflect-padded borders), averaged over
/// channels. Inputs are expected in [0, 1]. Throws kShapeMismatch.
Grid<double> ssim(const Image& a, const Image& b);

/// alpha * (1 - ssim) / 2 + beta * l1 for one pixel.
double photometric_term(double ssim_value, double l1, const PhotometricWeights& w);

/// Per-pixel photometric reconstruction loss; the L1 part is the mean absolute
/// difference over channels.
Grid<double> photometric_loss(const Image& target, const Image& reconstructed,
                              const PhotometricWeights& w = {});

/// Network-predicted log of the Laplacian scale, per pixel.
using UncertaintyMap = Grid<double>;

/// Negative Laplacian log-likelihood of log(d) around log(d_pseudo):
///   |log d - log d_pseudo| / exp(log_sigma) + log_sigma.
double distill_loss(double depth, double pseudo_depth, double log_sigma);

struct DistillGradient {
  double d_depth = 0.0;
  double d_log_sigma = 0.0;
};

/// Analytic gradient of distill_loss; uses the zero subgradient at
/// depth == pseudo_depth.
DistillGradient distill_loss_gradient(double depth, double pseudo_depth, double log_sigma);

/// Throws kNonPositiveDepth or kShapeMismatch.
Grid<double> distill_loss(const DepthMap& depth, const DepthMap& pseudo_depth,
                          const UncertaintyMap& log_sigma);

/// Mean of `loss` over pixels where mask != 0. Throws kEmptyMask when nothing
/// is permitted.
double masked_mean(const Grid<double>& loss, const Mask& mask);

}  // namespace fsd
