#include "fsd/losses.hpp"

#include <cmath>

#include "fsd/error.hpp"
#include "fsd/parallel.hpp"

namespace fsd {
namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

void require_same(const Image& a, const Image& b) {
  if (!a.same_shape(b) || a.channels() != b.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "images differ in size or channel count");
  }
}

}  // namespace

Grid<double> ssim(const Image& a, const Image& b) {
  require_same(a, b);
  Grid<double> out(a.rows(), a.cols());
  const int channels = a.channels();
  parallel_for(0, a.rows(), [&](int r) {
    for (int c = 0; c < a.cols(); ++c) {
      double total = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = reflect(r + dr, a.rows());
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = reflect(c + dc, a.cols());
            const double x = a(rr, cc, ch);
            const double y = b(rr, cc, ch);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
          }
        }
        const double mx = sx / 9.0;
        const double my = sy / 9.0;
        const double vx = sxx / 9.0 - mx * mx;
        const double vy = syy / 9.0 - my * my;
        const double cov = sxy / 9.0 - mx * my;
        const double num = (2.0 * mx * my + kSsimC1) * (2.0 * cov + kSsimC2);
        const double den = (mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2);
        total += num / den;
      }
      out(r, c) = total / channels;
    }
  });
  return out;
}

double photometric_term(double ssim_value, double l1, const PhotometricWeights& w) {
  return w.alpha * (1.0 - ssim_value) / 2.0 + w.beta * l1;
}

Grid<double> photometric_loss(const Image& target, const Image& reconstructed,
                              const PhotometricWeights& w) {
  require_same(target, reconstructed);
  if (w.alpha < 0.0 || w.beta < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "photometric weights must be non-negative");
  }
  Grid<double> out = ssim(target, reconstructed);
  const int channels = target.channels();
  for (int r = 0; r < target.rows(); ++r) {
    for (int c = 0; c < target.cols(); ++c) {
      double l1 = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        l1 += std::abs(target(r, c, ch) - reconstructed(r, c, ch));
      }
      out(r, c) = photometric_term(out(r, c), l1 / channels, w);
    }
  }
  return out;
}

double distill_loss(double depth, double pseudo_depth, double log_sigma) {
  if (!(depth > 0.0) || !(pseudo_depth > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "distillation needs positive depths");
  }
  return std::abs(std::log(depth) - std::log(pseudo_depth)) / std::exp(log_sigma) + log_sigma;
}

DistillGradient distill_loss_gradient(double depth, double pseudo_depth, double log_sigma) {
  if (!(depth > 0.0) || !(pseudo_depth > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "distillation needs positive depths");
  }
  const double diff = std::log(depth) - std::log(pseudo_depth);
  const double inv_sigma = std::exp(-log_sigma);
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  return {sign * inv_sigma / depth, 1.0 - std::abs(diff) * inv_sigma};
}

Grid<double> distill_loss(const DepthMap& depth, const DepthMap& pseudo_depth,
                          const UncertaintyMap& log_sigma) {
  if (!depth.same_shape(pseudo_depth) || !depth.same_shape(log_sigma)) {
    throw Error(ErrorCode::kShapeMismatch, "depth, pseudo label and uncertainty sizes differ");
  }
  Grid<double> out(depth.rows(), depth.cols());
  auto d = depth.values();
  auto p = pseudo_depth.values();
  auto s = log_sigma.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = distill_loss(d[i], p[i], s[i]);
  return out;
}

double masked_mean(const Grid<double>& loss, const Mask& mask) {
  if (!loss.same_shape(mask)) throw Error(ErrorCode::kShapeMismatch, "mask size differs");
  auto l = loss.values();
  auto m = mask.values();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (m[i] != 0) {
      sum += l[i];
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kEmptyMask, "mask excludes every pixel");
  return sum / static_cast<double>(count);
}

}  // namespace fsd
