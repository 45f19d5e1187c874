#include "fsd/fusion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "fsd/error.hpp"
#include "fsd/parallel.hpp"

namespace fsd {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double vo_weight(const SegmentSummary& s, const FusionWeights& w) {
  return s.has_vo ? w.lambda1 : 0.0;
}

void check_vo_bounds(const SparseDepthMap& vo, int rows, int cols) {
  for (const auto& p : vo.points) {
    if (p.u < 0 || p.u >= cols || p.v < 0 || p.v >= rows) {
      throw Error(ErrorCode::kOutOfBounds, "VO point (" + std::to_string(p.u) + ", " +
                                               std::to_string(p.v) + ") outside " +
                                               std::to_string(cols) + "x" +
                                               std::to_string(rows) + " image");
    }
    if (!(p.depth > 0.0)) {
      throw Error(ErrorCode::kNonPositiveDepth, "VO depth must be positive");
    }
  }
}

}  // namespace

void FusionWeights::validate() const {
  if (!(lambda0 >= 0.0) || !(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda0) ||
      !std::isfinite(lambda1) || !std::isfinite(lambda2)) {
    throw Error(ErrorCode::kInvalidArgument, "fusion weights must be finite and non-negative");
  }
}

Grid<double> log_depth(const DepthMap& depth) {
  Grid<double> out(depth.rows(), depth.cols());
  auto src = depth.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!(src[i] > 0.0)) throw Error(ErrorCode::kNonPositiveDepth, "log of non-positive depth");
    dst[i] = std::log(src[i]);
  }
  return out;
}

double inner_scale(std::span<const double> lg_net_at_vo, std::span<const double> lg_vo) {
  if (lg_net_at_vo.size() != lg_vo.size()) {
    throw Error(ErrorCode::kShapeMismatch, "network and VO sample counts differ");
  }
  if (lg_vo.empty()) throw Error(ErrorCode::kNoVoPoints, "segment has no VO points");
  double sum = 0.0;
  for (std::size_t i = 0; i < lg_vo.size(); ++i) sum += lg_vo[i] - lg_net_at_vo[i];
  return sum / static_cast<double>(lg_vo.size());
}

std::vector<SegmentSummary> summarize_segments(const LabelMap& labels, int n_segments,
                                               const Grid<double>& lg_net,
                                               const SparseDepthMap& vo) {
  if (!labels.same_shape(lg_net)) {
    throw Error(ErrorCode::kShapeMismatch, "label map and log-depth sizes differ");
  }
  if (n_segments < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one segment");
  check_vo_bounds(vo, labels.rows(), labels.cols());

  std::vector<double> sum(static_cast<std::size_t>(n_segments), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_segments), 0);
  auto lab = labels.values();
  auto lg = lg_net.values();
  for (std::size_t i = 0; i < lab.size(); ++i) {
    const int k = lab[i];
    if (k < 0 || k >= n_segments) {
      throw Error(ErrorCode::kOutOfBounds, "label " + std::to_string(k) + " out of range");
    }
    sum[static_cast<std::size_t>(k)] += lg[i];
    ++count[static_cast<std::size_t>(k)];
  }

  std::vector<std::vector<double>> net_at_vo(static_cast<std::size_t>(n_segments));
  std::vector<std::vector<double>> vo_log(static_cast<std::size_t>(n_segments));
  for (const auto& p : vo.points) {
    const auto k = static_cast<std::size_t>(labels(p.v, p.u));
    net_at_vo[k].push_back(lg_net(p.v, p.u));
    vo_log[k].push_back(std::log(p.depth));
  }

  std::vector<SegmentSummary> out(static_cast<std::size_t>(n_segments));
  for (std::size_t k = 0; k < out.size(); ++k) {
    SegmentSummary& s = out[k];
    s.lg0 = count[k] > 0 ? sum[k] / static_cast<double>(count[k]) : 0.0;
    s.vo_count = static_cast<int>(vo_log[k].size());
    s.has_vo = s.vo_count > 0;
    s.lg_tar = s.has_vo ? s.lg0 + inner_scale(net_at_vo[k], vo_log[k]) : 0.0;
  }
  return out;
}

OuterSystem build_outer_system(std::span<const SegmentSummary> summaries,
                               const FusionWeights& w) {
  const int n = static_cast<int>(summaries.size());
  OuterSystem sys{Eigen::MatrixXd::Constant(n, n, -w.lambda0), Eigen::VectorXd(n)};
  double lg0_sum = 0.0;
  for (const auto& s : summaries) lg0_sum += s.lg0;
  for (int k = 0; k < n; ++k) {
    const auto& s = summaries[static_cast<std::size_t>(k)];
    const double l1 = vo_weight(s, w);
    sys.a(k, k) = (n - 1) * w.lambda0 + l1 + w.lambda2;
    // sum_{i != k} (lg0_k - lg0_i)
    const double spread = (n - 1) * s.lg0 - (lg0_sum - s.lg0);
    sys.b(k) = w.lambda2 * s.lg0 + (s.has_vo ? l1 * s.lg_tar : 0.0) + w.lambda0 * spread;
  }
  return sys;
}

std::vector<double> solve_outer(std::span<const SegmentSummary> summaries,
                                const FusionWeights& w) {
  w.validate();
  const std::size_t n = summaries.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "no segments to optimize");

  // Solve A * delta = r with delta = lg - lg0 and r_k = lambda1_k (lg_tar_k - lg0_k).
  std::vector<double> diag(n), rhs(n);
  double slack = 0.0;  // 1 - lambda0 * sum(1/D_k), accumulated without cancellation
  bool any_rhs = false;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = summaries[k];
    const double l1 = vo_weight(s, w);
    const double anchor = l1 + w.lambda2;
    diag[k] = static_cast<double>(n) * w.lambda0 + anchor;
    if (!(diag[k] > 0.0)) {
      throw Error(ErrorCode::kSingularSystem,
                  "segment " + std::to_string(k) + " is unconstrained (all weights zero)");
    }
    slack += anchor / (static_cast<double>(n) * diag[k]);
    rhs[k] = s.has_vo ? l1 * (s.lg_tar - s.lg0) : 0.0;
    any_rhs = any_rhs || rhs[k] != 0.0;
  }
  if (w.lambda0 > 0.0 && !(slack > 0.0)) {
    throw Error(ErrorCode::kSingularSystem,
                "no segment is anchored by VO or the prior (lambda2 = 0 without VO)");
  }

  std::vector<double> lg(n);
  if (!any_rhs) {
    for (std::size_t k = 0; k < n; ++k) lg[k] = summaries[k].lg0;
    return lg;
  }

  double y_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) y_sum += rhs[k] / diag[k];
  const double coupling = w.lambda0 > 0.0 ? w.lambda0 * y_sum / slack : 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    lg[k] = summaries[k].lg0 + (rhs[k] + coupling) / diag[k];
  }
  return lg;
}

std::vector<double> solve_outer_dense(std::span<const SegmentSummary> summaries,
                                      const FusionWeights& w) {
  w.validate();
  if (summaries.empty()) throw Error(ErrorCode::kInvalidArgument, "no segments to optimize");
  const OuterSystem sys = build_outer_system(summaries, w);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.a);
  if (!lu.isInvertible()) throw Error(ErrorCode::kSingularSystem, "outer system is singular");
  const Eigen::VectorXd x = lu.solve(sys.b);
  return {x.data(), x.data() + x.size()};
}

double outer_objective(std::span<const double> lg, std::span<const SegmentSummary> summaries,
                       const FusionWeights& w) {
  if (lg.size() != summaries.size()) {
    throw Error(ErrorCode::kShapeMismatch, "solution and summary counts differ");
  }
  double consistency = 0.0;
  double anchors = 0.0;
  for (std::size_t k = 0; k < lg.size(); ++k) {
    const auto& s = summaries[k];
    for (std::size_t j = k + 1; j < lg.size(); ++j) {
      const double e = (lg[k] - lg[j]) - (s.lg0 - summaries[j].lg0);
      consistency += e * e;
    }
    if (s.has_vo) anchors += w.lambda1 * (s.lg_tar - lg[k]) * (s.lg_tar - lg[k]);
    anchors += w.lambda2 * (lg[k] - s.lg0) * (lg[k] - s.lg0);
  }
  return w.lambda0 * consistency + anchors;
}

Grid<double> apply_segment_correction(const Grid<double>& lg_net, const LabelMap& labels,
                                      std::span<const double> lg_seg,
                                      std::span<const double> lg0) {
  if (!labels.same_shape(lg_net)) {
    throw Error(ErrorCode::kShapeMismatch, "label map and log-depth sizes differ");
  }
  if (lg_seg.size() != lg0.size()) {
    throw Error(ErrorCode::kShapeMismatch, "segment solution and lg0 counts differ");
  }
  Grid<double> out(lg_net.rows(), lg_net.cols());
  auto lab = labels.values();
  auto src = lg_net.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto k = static_cast<std::size_t>(lab[i]);
    if (k >= lg_seg.size()) throw Error(ErrorCode::kOutOfBounds, "label out of range");
    dst[i] = src[i] + (lg_seg[k] - lg0[k]);
  }
  return out;
}

double pixelwise_objective(const Grid<double>& lg, const Grid<double>& lg_net,
                           const SparseDepthMap& vo, const FusionWeights& w) {
  if (!lg.same_shape(lg_net)) throw Error(ErrorCode::kShapeMismatch, "log-depth sizes differ");
  check_vo_bounds(vo, lg.rows(), lg.cols());
  auto a = lg.values();
  auto b = lg_net.values();
  double consistency = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double e = (b[i] - b[j]) - (a[i] - a[j]);
      consistency += e * e;
    }
  }
  double vo_term = 0.0;
  for (const auto& p : vo.points) {
    const double e = std::log(p.depth) - lg(p.v, p.u);
    vo_term += e * e;
  }
  return w.lambda0 * consistency + w.lambda1 * vo_term;
}

Grid<double> pixelwise_oracle(const Grid<double>& lg_net, const SparseDepthMap& vo,
                              const FusionWeights& w) {
  w.validate();
  const std::size_t n = lg_net.pixel_count();
  if (n > kMaxOraclePixels) {
    throw Error(ErrorCode::kTooLarge, "pixel-level oracle limited to " +
                                          std::to_string(kMaxOraclePixels) + " pixels");
  }
  check_vo_bounds(vo, lg_net.rows(), lg_net.cols());
  if (vo.empty() || w.lambda1 == 0.0) return lg_net;

  // Unknown: delta = lg - lg_net. Gradient of the objective is H delta - b with
  //   H = 4 lambda0 (n I - 1 1^T) + 2 diag(vo_weight),  b = 2 sum_vo lambda1 r_i.
  Eigen::VectorXd vo_weight = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& p : vo.points) {
    const auto i = static_cast<Eigen::Index>(p.v) * lg_net.cols() + p.u;
    vo_weight[i] += w.lambda1;
    b[i] += 2.0 * w.lambda1 * (std::log(p.depth) - lg_net(p.v, p.u));
  }
  const double nn = static_cast<double>(n);
  auto apply_h = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return 4.0 * w.lambda0 * (nn * x.array() - x.sum()).matrix() +
           2.0 * vo_weight.cwiseProduct(x);
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd r = b;
  Eigen::VectorXd d = r;
  double rr = r.squaredNorm();
  const double stop = 1e-30 * std::max(1.0, b.squaredNorm());
  for (std::size_t it = 0; it < 20 * n && rr > stop; ++it) {
    const Eigen::VectorXd hd = apply_h(d);
    const double curvature = d.dot(hd);
    if (!(curvature > 0.0)) break;
    const double alpha = rr / curvature;
    x += alpha * d;
    r -= alpha * hd;
    const double rr_next = r.squaredNorm();
    d = r + (rr_next / rr) * d;
    rr = rr_next;
  }

  Grid<double> out(lg_net.rows(), lg_net.cols());
  auto src = lg_net.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] + x[static_cast<Eigen::Index>(i)];
  return out;
}

FusionResult fuse_segments(const DepthMap& net_depth, SegmentLabels segments,
                           const SparseDepthMap& vo, const FusionWeights& w, double d_min,
                           double d_max) {
  const auto start = std::chrono::steady_clock::now();
  w.validate();
  if (!(d_min > 0.0) || !(d_max > d_min)) {
    throw Error(ErrorCode::kInvalidRange, "fusion clamp range requires 0 < d_min < d_max");
  }
  const Grid<double> lg_net = log_depth(net_depth);

  FusionResult result;
  result.summaries = summarize_segments(segments.labels, segments.size(), lg_net, vo);
  result.segments = std::move(segments);

  const bool any_vo = std::any_of(result.summaries.begin(), result.summaries.end(),
                                  [](const SegmentSummary& s) { return s.has_vo; });
  if (!any_vo) {
    for (const auto& s : result.summaries) result.lg_seg.push_back(s.lg0);
    result.depth = net_depth;
    result.optimize_seconds = seconds_since(start);
    return result;
  }

  result.lg_seg = solve_outer(result.summaries, w);
  std::vector<double> factor(result.lg_seg.size());
  for (std::size_t k = 0; k < factor.size(); ++k) {
    factor[k] = std::exp(result.lg_seg[k] - result.summaries[k].lg0);
  }

  result.depth = DepthMap(net_depth.rows(), net_depth.cols());
  const LabelMap& labels = result.segments.labels;
  parallel_for(0, net_depth.rows(), [&](int r) {
    for (int c = 0; c < net_depth.cols(); ++c) {
      const double d = net_depth(r, c) * factor[static_cast<std::size_t>(labels(r, c))];
      result.depth(r, c) = std::clamp(d, d_min, d_max);
    }
  });
  result.optimize_seconds = seconds_since(start);
  return result;
}

FusionResult fuse(const Image& rgb, const DepthMap& net_depth, const SparseDepthMap& vo,
                  const FusionOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SegmentLabels segments = segment(rgb_to_lab(rgb), net_depth, options.slic);
  const double segment_seconds = seconds_since(start);
  FusionResult result = fuse_segments(net_depth, std::move(segments), vo, options.weights,
                                      options.d_min, options.d_max);
  result.segment_seconds = segment_seconds;
  return result;
}

}  // namespace fsd
