#include "fsd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fsd/error.hpp"

namespace fsd {
namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

bool permitted(const Mask& mask, int r, int c) { return mask.empty() || mask(r, c) != 0; }

void check_shapes(const DepthMap& pred, const DepthMap& gt, const Mask& mask) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::kShapeMismatch, "pred and gt sizes differ");
  if (!mask.empty() && !mask.same_shape(gt)) {
    throw Error(ErrorCode::kShapeMismatch, "mask size differs from gt");
  }
}

}  // namespace

void EvalConfig::validate() const {
  if (!(min_depth > 0.0) || !(max_depth > min_depth)) {
    throw Error(ErrorCode::kInvalidRange, "evaluation range requires 0 < min < max");
  }
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 32;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Mask evaluation_mask(const DepthMap& pred, const DepthMap& gt, const Mask& mask,
                     const EvalConfig& cfg) {
  check_shapes(pred, gt, mask);
  cfg.validate();
  int r0 = 0, r1 = gt.rows(), c0 = 0, c1 = gt.cols();
  if (cfg.eigen_crop) {
    r0 = static_cast<int>(0.40810811 * gt.rows());
    r1 = static_cast<int>(0.99189189 * gt.rows());
    c0 = static_cast<int>(0.03594771 * gt.cols());
    c1 = static_cast<int>(0.96405229 * gt.cols());
  }
  Mask out(gt.rows(), gt.cols(), 1, 0);
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      const double g = gt(r, c);
      const double p = pred(r, c);
      if (permitted(mask, r, c) && g >= cfg.min_depth && g <= cfg.max_depth && p > 0.0 &&
          std::isfinite(p)) {
        out(r, c) = 1;
      }
    }
  }
  return out;
}

MedianScaled median_scale(const DepthMap& pred, const DepthMap& gt, const Mask& valid) {
  check_shapes(pred, gt, valid);
  std::vector<double> p, g;
  for (int r = 0; r < gt.rows(); ++r) {
    for (int c = 0; c < gt.cols(); ++c) {
      if (permitted(valid, r, c) && gt(r, c) > 0.0 && pred(r, c) > 0.0) {
        p.push_back(pred(r, c));
        g.push_back(gt(r, c));
      }
    }
  }
  if (p.empty()) throw Error(ErrorCode::kNoValidPixels, "median scaling needs valid pixels");
  MedianScaled out{pred, median_of(std::move(g)) / median_of(std::move(p))};
  for (double& v : out.pred.values()) v *= out.factor;
  return out;
}

DepthEvalResult evaluate(const DepthMap& pred_in, const DepthMap& gt, const Mask& mask,
                         const EvalConfig& cfg) {
  Mask valid = evaluation_mask(pred_in, gt, mask, cfg);
  const DepthMap pred =
      cfg.use_median_scaling ? median_scale(pred_in, gt, valid).pred : pred_in;
  if (cfg.use_median_scaling) valid = evaluation_mask(pred, gt, valid, cfg);

  std::vector<double> abs_rel, sq_rel, sq, sq_log, d1, d2, d3;
  for (int r = 0; r < gt.rows(); ++r) {
    for (int c = 0; c < gt.cols(); ++c) {
      if (valid(r, c) == 0) continue;
      const double g = gt(r, c);
      const double p = pred(r, c);
      const double e = p - g;
      const double e_log = std::log(p) - std::log(g);
      const double ratio = std::max(p / g, g / p);
      abs_rel.push_back(std::abs(e) / g);
      sq_rel.push_back(e * e / g);
      sq.push_back(e * e);
      sq_log.push_back(e_log * e_log);
      d1.push_back(ratio < 1.25 ? 1.0 : 0.0);
      d2.push_back(ratio < 1.25 * 1.25 ? 1.0 : 0.0);
      d3.push_back(ratio < 1.25 * 1.25 * 1.25 ? 1.0 : 0.0);
    }
  }
  if (abs_rel.empty()) throw Error(ErrorCode::kNoValidPixels, "no pixel survives filtering");

  const double n = static_cast<double>(abs_rel.size());
  DepthEvalResult out;
  out.abs_rel = pairwise_sum(abs_rel) / n;
  out.sq_rel = pairwise_sum(sq_rel) / n;
  out.rmse = std::sqrt(pairwise_sum(sq) / n);
  out.rmse_log = std::sqrt(pairwise_sum(sq_log) / n);
  out.delta1 = pairwise_sum(d1) / n;
  out.delta2 = pairwise_sum(d2) / n;
  out.delta3 = pairwise_sum(d3) / n;
  out.n_pixels = abs_rel.size();
  return out;
}

DepthEvalResult aggregate(std::span<const DepthEvalResult> results) {
  if (results.empty()) throw Error(ErrorCode::kEmptyList, "nothing to aggregate");
  DepthEvalResult out;
  double total = 0.0;
  for (const auto& r : results) total += static_cast<double>(r.n_pixels);
  if (total == 0.0) throw Error(ErrorCode::kEmptyList, "results carry no pixels");
  for (const auto& r : results) {
    const double w = static_cast<double>(r.n_pixels) / total;
    out.abs_rel += w * r.abs_rel;
    out.sq_rel += w * r.sq_rel;
    out.rmse += w * r.rmse;
    out.rmse_log += w * r.rmse_log;
    out.delta1 += w * r.delta1;
    out.delta2 += w * r.delta2;
    out.delta3 += w * r.delta3;
    out.n_pixels += r.n_pixels;
  }
  return out;
}

}  // namespace fsd
