#pragma once

#include <span>
#include <vector>

#include "fsd/grid.hpp"

namespace fsd {

inline constexpr double kDefaultMinDepth = 0.1;
inline constexpr double kDefaultMaxDepth = 100.0;
inline constexpr int kDefaultBinCount = 64;

/// Single-channel inverse-depth decode:
///   1/d = 1/d_max + sigmoid(x) * (1/d_min - 1/d_max).
/// Throws kInvalidRange unless 0 < d_min < d_max.
double decode_sigmoid(double x, double d_min, double d_max);
DepthMap decode_sigmoid(const Grid<double>& x, double d_min, double d_max);

/// Depth bins in geometric progression, d_i = d_min * (d_max / d_min)^(i/N)
/// for i = 1..N, so the last bin is exactly d_max.
struct BinSpec {
  double d_min = kDefaultMinDepth;
  double d_max = kDefaultMaxDepth;
  std::vector<double> values;

  int size() const noexcept { return static_cast<int>(values.size()); }
  /// Ratio q between consecutive bins.
  double ratio() const;
  void validate() const;
};

BinSpec make_bins(double d_min, double d_max, int n_bins);

/// H x W x N raw network outputs.
using LogitsMap = Grid<double>;

/// Softmax-weighted mean of the bins for one pixel.
double decode_pixel(std::span<const double> logits, const BinSpec& bins);

/// d(depth)/d(logit_j) = z_j * (d_j - depth), written into `grad`.
void decode_pixel_gradient(std::span<const double> logits, const BinSpec& bins,
                           std::span<double> grad);

/// Throws kChannelMismatch when logits.channels() != bins.size().
DepthMap decode_multichannel(const LogitsMap& logits, const BinSpec& bins);

/// Arithmetic mean of the bins: the decoded depth of a network whose softmax
/// is still uniform.
double uniform_init_mean(const BinSpec& bins);

/// Limit of uniform_init_mean as N grows:
/// (d_max - d_min) / (ln d_max - ln d_min).
double limit_mean(double d_min, double d_max);

/// Scale every bin by fx / f_base so one network serves cameras with
/// different focal lengths.
BinSpec adapt_bins_to_camera(const BinSpec& bins, double fx, double f_base);

}  // namespace fsd
