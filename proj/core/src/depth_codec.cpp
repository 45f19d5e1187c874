#include "fsd/depth_codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsd/error.hpp"
#include "fsd/parallel.hpp"

namespace fsd {
namespace {

void check_range(double d_min, double d_max) {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max)) {
    throw Error(ErrorCode::kInvalidRange, "depth range requires 0 < d_min < d_max, got [" +
                                              std::to_string(d_min) + ", " +
                                              std::to_string(d_max) + "]");
  }
}

// Softmax with max subtraction; returns the normalizer and leaves exp(x - max)
// in `z` (unnormalized).
double softmax_unnormalized(std::span<const double> logits, std::span<double> z) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    z[i] = std::exp(logits[i] - top);
    sum += z[i];
  }
  return sum;
}

}  // namespace

double decode_sigmoid(double x, double d_min, double d_max) {
  check_range(d_min, d_max);
  const double s = 1.0 / (1.0 + std::exp(-x));
  const double inv = 1.0 / d_max + s * (1.0 / d_min - 1.0 / d_max);
  return 1.0 / inv;
}

DepthMap decode_sigmoid(const Grid<double>& x, double d_min, double d_max) {
  check_range(d_min, d_max);
  DepthMap out(x.rows(), x.cols());
  auto src = x.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = decode_sigmoid(src[i], d_min, d_max);
  return out;
}

double BinSpec::ratio() const {
  return std::pow(d_max / d_min, 1.0 / static_cast<double>(values.size()));
}

void BinSpec::validate() const {
  check_range(d_min, d_max);
  if (values.size() < 2) throw Error(ErrorCode::kInvalidRange, "at least two bins required");
  const double q = values[1] / values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw Error(ErrorCode::kInvalidRange, "bin values must be strictly increasing");
    }
    if (std::abs(values[i] / values[i - 1] - q) > 1e-9 * q) {
      throw Error(ErrorCode::kInvalidRange, "bin values are not a geometric progression");
    }
  }
}

BinSpec make_bins(double d_min, double d_max, int n_bins) {
  check_range(d_min, d_max);
  if (n_bins < 2) throw Error(ErrorCode::kInvalidRange, "at least two bins required");
  BinSpec bins{d_min, d_max, std::vector<double>(static_cast<std::size_t>(n_bins))};
  const double span = d_max / d_min;
  for (int i = 1; i <= n_bins; ++i) {
    bins.values[i - 1] = d_min * std::pow(span, static_cast<double>(i) / n_bins);
  }
  bins.values.back() = d_max;
  return bins;
}

double decode_pixel(std::span<const double> logits, const BinSpec& bins) {
  if (logits.size() != bins.values.size()) {
    throw Error(ErrorCode::kChannelMismatch, "logit count " + std::to_string(logits.size()) +
                                                 " != bin count " +
                                                 std::to_string(bins.values.size()));
  }
  std::vector<double> z(logits.size());
  const double norm = softmax_unnormalized(logits, z);
  double depth = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) depth += z[i] * bins.values[i];
  return depth / norm;
}

void decode_pixel_gradient(std::span<const double> logits, const BinSpec& bins,
                           std::span<double> grad) {
  if (logits.size() != bins.values.size() || grad.size() != logits.size()) {
    throw Error(ErrorCode::kChannelMismatch, "logit, bin and gradient sizes differ");
  }
  std::vector<double> z(logits.size());
  const double norm = softmax_unnormalized(logits, z);
  double depth = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] /= norm;
    depth += z[i] * bins.values[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) grad[i] = z[i] * (bins.values[i] - depth);
}

DepthMap decode_multichannel(const LogitsMap& logits, const BinSpec& bins) {
  if (logits.channels() != bins.size()) {
    throw Error(ErrorCode::kChannelMismatch, "logits have " +
                                                 std::to_string(logits.channels()) +
                                                 " channels, bins expect " +
                                                 std::to_string(bins.size()));
  }
  DepthMap out(logits.rows(), logits.cols());
  parallel_for(0, logits.rows(), [&](int r) {
    for (int c = 0; c < logits.cols(); ++c) out(r, c) = decode_pixel(logits.pixel(r, c), bins);
  });
  return out;
}

double uniform_init_mean(const BinSpec& bins) {
  bins.validate();
  double sum = 0.0;
  for (double v : bins.values) sum += v;
  return sum / static_cast<double>(bins.values.size());
}

double limit_mean(double d_min, double d_max) {
  check_range(d_min, d_max);
  return (d_max - d_min) / (std::log(d_max) - std::log(d_min));
}

BinSpec adapt_bins_to_camera(const BinSpec& bins, double fx, double f_base) {
  if (!(fx > 0.0) || !(f_base > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  const double factor = fx / f_base;
  BinSpec out = bins;
  out.d_min *= factor;
  out.d_max *= factor;
  for (double& v : out.values) v *= factor;
  return out;
}

}  // namespace fsd
