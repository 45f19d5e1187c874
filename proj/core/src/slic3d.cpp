#include "fsd/slic3d.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "fsd/error.hpp"
#include "fsd/parallel.hpp"

namespace fsd {
namespace {

// sRGB primaries, D65.
const Eigen::Matrix3d& rgb_to_xyz_matrix() {
  static const Eigen::Matrix3d m = [] {
    Eigen::Matrix3d t;
    t << 0.4124564, 0.3575761, 0.1804375,
         0.2126729, 0.7151522, 0.0721750,
         0.0193339, 0.1191920, 0.9503041;
    return t;
  }();
  return m;
}

const Eigen::Matrix3d& xyz_to_rgb_matrix() {
  static const Eigen::Matrix3d m = rgb_to_xyz_matrix().inverse();
  return m;
}

const Eigen::Vector3d kWhite(0.95047, 1.0, 1.08883);
constexpr double kDelta = 6.0 / 29.0;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
  return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

Image convert(const Image& in, Eigen::Vector3d (*fn)(const Eigen::Vector3d&)) {
  if (in.channels() != 3) {
    throw Error(ErrorCode::kChannelMismatch, "color conversion needs three channels");
  }
  Image out(in.rows(), in.cols(), 3);
  parallel_for(0, in.rows(), [&](int r) {
    for (int c = 0; c < in.cols(); ++c) {
      auto src = in.pixel(r, c);
      const Eigen::Vector3d v = fn(Eigen::Vector3d(src[0], src[1], src[2]));
      auto dst = out.pixel(r, c);
      dst[0] = v[0];
      dst[1] = v[1];
      dst[2] = v[2];
    }
  });
  return out;
}

void check_inputs(const Image& lab, const DepthMap& depth) {
  if (lab.channels() != 3) throw Error(ErrorCode::kChannelMismatch, "LAB image needs 3 channels");
  if (!lab.same_shape(depth) || depth.channels() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "LAB image and depth map sizes differ");
  }
  for (double d : depth.values()) {
    if (!(d > 0.0)) throw Error(ErrorCode::kNonPositiveDepth, "segmentation needs depth > 0");
  }
}

// Rows per accumulation block. Fixed so sums do not depend on thread count.
constexpr int kBlockRows = 16;

// Centers bucketed on a step-sized grid for window queries.
class CenterIndex {
 public:
  CenterIndex(std::span<const PixelFeature> centers, int rows, int cols, int step)
      : step_(step),
        nx_(std::max(1, (cols + step - 1) / step)),
        ny_(std::max(1, (rows + step - 1) / step)),
        buckets_(static_cast<std::size_t>(nx_) * ny_) {
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const int bx = bucket_of(centers[k].xy.x(), nx_);
      const int by = bucket_of(centers[k].xy.y(), ny_);
      buckets_[static_cast<std::size_t>(by) * nx_ + bx].push_back(static_cast<int>(k));
    }
  }

  // Visit every center whose bucket intersects [x-2s, x+2s] x [y-2s, y+2s].
  template <typename Fn>
  void for_each_near(double x, double y, Fn&& fn) const {
    const double reach = 2.0 * step_;
    const int bx0 = bucket_of(x - reach, nx_);
    const int bx1 = bucket_of(x + reach, nx_);
    const int by0 = bucket_of(y - reach, ny_);
    const int by1 = bucket_of(y + reach, ny_);
    for (int by = by0; by <= by1; ++by) {
      for (int bx = bx0; bx <= bx1; ++bx) {
        for (int k : buckets_[static_cast<std::size_t>(by) * nx_ + bx]) fn(k);
      }
    }
  }

 private:
  int bucket_of(double v, int n) const {
    const double b = std::floor(v / step_);
    return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(n - 1)));
  }

  int step_;
  int nx_;
  int ny_;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace

Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& rgb) {
  const Eigen::Vector3d linear(srgb_to_linear(rgb[0]), srgb_to_linear(rgb[1]),
                               srgb_to_linear(rgb[2]));
  const Eigen::Vector3d xyz = rgb_to_xyz_matrix() * linear;
  const double fx = lab_f(xyz[0] / kWhite[0]);
  const double fy = lab_f(xyz[1] / kWhite[1]);
  const double fz = lab_f(xyz[2] / kWhite[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Eigen::Vector3d lab_to_rgb(const Eigen::Vector3d& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0;
  const double fz = fy - lab[2] / 200.0;
  const Eigen::Vector3d xyz(kWhite[0] * lab_f_inv(fx), kWhite[1] * lab_f_inv(fy),
                            kWhite[2] * lab_f_inv(fz));
  const Eigen::Vector3d linear = xyz_to_rgb_matrix() * xyz;
  return {linear_to_srgb(linear[0]), linear_to_srgb(linear[1]), linear_to_srgb(linear[2])};
}

Image rgb_to_lab(const Image& rgb) {
  return convert(rgb, static_cast<Eigen::Vector3d (*)(const Eigen::Vector3d&)>(&rgb_to_lab));
}

Image lab_to_rgb(const Image& lab) {
  return convert(lab, static_cast<Eigen::Vector3d (*)(const Eigen::Vector3d&)>(&lab_to_rgb));
}

void SlicParams::validate() const {
  if (step < 2) throw Error(ErrorCode::kInvalidArgument, "slic step must be >= 2");
  if (lambda_lab < 0.0 || lambda_d < 0.0 || lambda_pix < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "slic weights must be non-negative");
  }
  if (lambda_lab + lambda_d + lambda_pix <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "slic weights must not all be zero");
  }
  if (max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "slic max_iter must be >= 1");
}

double slic_distance(const PixelFeature& a, const PixelFeature& b, const SlicParams& p) {
  return p.lambda_lab * (a.lab - b.lab).norm() + p.lambda_d * std::abs(a.depth - b.depth) +
         p.lambda_pix * (a.xy - b.xy).norm();
}

PixelFeature pixel_feature(const Image& lab, const DepthMap& depth, int row, int col) {
  auto px = lab.pixel(row, col);
  return {Eigen::Vector3d(px[0], px[1], px[2]), Eigen::Vector2d(col, row), depth(row, col)};
}

std::vector<PixelFeature> initial_centers(const Image& lab, const DepthMap& depth,
                                          const SlicParams& p) {
  const int nx = std::max(1, lab.cols() / p.step);
  const int ny = std::max(1, lab.rows() / p.step);
  std::vector<PixelFeature> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    const double y = (j + 0.5) * lab.rows() / ny - 0.5;
    for (int i = 0; i < nx; ++i) {
      const double x = (i + 0.5) * lab.cols() / nx - 0.5;
      const int r = std::clamp(static_cast<int>(std::lround(y)), 0, lab.rows() - 1);
      const int c = std::clamp(static_cast<int>(std::lround(x)), 0, lab.cols() - 1);
      PixelFeature f = pixel_feature(lab, depth, r, c);
      f.xy = Eigen::Vector2d(x, y);
      centers.push_back(f);
    }
  }
  return centers;
}

LabelMap assign_pixels(const Image& lab, const DepthMap& depth,
                       std::span<const PixelFeature> centers, const SlicParams& p,
                       double* objective) {
  if (centers.empty()) throw Error(ErrorCode::kInvalidArgument, "no cluster centers");
  LabelMap labels(lab.rows(), lab.cols(), 1, -1);
  std::vector<double> row_cost(static_cast<std::size_t>(lab.rows()), 0.0);
  const CenterIndex index(centers, lab.rows(), lab.cols(), p.step);
  const double window_bound = p.lambda_pix * 2.0 * p.step;
  const int n_centers = static_cast<int>(centers.size());

  parallel_for(0, lab.rows(), [&](int r) {
    double acc = 0.0;
    for (int c = 0; c < lab.cols(); ++c) {
      const PixelFeature f = pixel_feature(lab, depth, r, c);
      double best = std::numeric_limits<double>::infinity();
      int best_k = -1;
      auto consider = [&](int k) {
        const double cost = slic_distance(f, centers[k], p);
        if (cost < best || (cost == best && k < best_k)) {
          best = cost;
          best_k = k;
        }
      };
      if (!p.exhaustive) index.for_each_near(c, r, consider);
      if (p.exhaustive || !(best < window_bound)) {
        for (int k = 0; k < n_centers; ++k) consider(k);
      }
      labels(r, c) = best_k;
      acc += best;
    }
    row_cost[static_cast<std::size_t>(r)] = acc;
  });

  if (objective != nullptr) {
    double total = 0.0;
    for (double v : row_cost) total += v;
    *objective = total;
  }
  return labels;
}

std::vector<Cluster> update_centers(const Image& lab, const DepthMap& depth,
                                    const LabelMap& labels, int n_centers) {
  constexpr int kFields = 7;  // L a b x y depth count
  const int n_blocks = (lab.rows() + kBlockRows - 1) / kBlockRows;
  const std::size_t stride = static_cast<std::size_t>(n_centers) * kFields;
  std::vector<double> partial(static_cast<std::size_t>(n_blocks) * stride, 0.0);

  parallel_for(0, n_blocks, [&](int b) {
    double* acc = partial.data() + static_cast<std::size_t>(b) * stride;
    const int r_end = std::min(lab.rows(), (b + 1) * kBlockRows);
    for (int r = b * kBlockRows; r < r_end; ++r) {
      for (int c = 0; c < lab.cols(); ++c) {
        const int k = labels(r, c);
        double* s = acc + static_cast<std::size_t>(k) * kFields;
        auto px = lab.pixel(r, c);
        s[0] += px[0];
        s[1] += px[1];
        s[2] += px[2];
        s[3] += c;
        s[4] += r;
        s[5] += depth(r, c);
        s[6] += 1.0;
      }
    }
  });

  std::vector<double> total(stride, 0.0);
  for (int b = 0; b < n_blocks; ++b) {
    const double* acc = partial.data() + static_cast<std::size_t>(b) * stride;
    for (std::size_t i = 0; i < stride; ++i) total[i] += acc[i];
  }

  std::vector<Cluster> clusters(static_cast<std::size_t>(n_centers));
  for (int k = 0; k < n_centers; ++k) {
    const double* s = total.data() + static_cast<std::size_t>(k) * kFields;
    Cluster& cl = clusters[static_cast<std::size_t>(k)];
    cl.count = static_cast<std::size_t>(s[6]);
    if (cl.count == 0) continue;
    const double n = s[6];
    cl.center.lab = Eigen::Vector3d(s[0] / n, s[1] / n, s[2] / n);
    cl.center.xy = Eigen::Vector2d(s[3] / n, s[4] / n);
    cl.center.depth = s[5] / n;
  }
  return clusters;
}

double segmentation_objective(const Image& lab, const DepthMap& depth, const LabelMap& labels,
                              std::span<const Cluster> clusters, const SlicParams& p) {
  double total = 0.0;
  for (int r = 0; r < lab.rows(); ++r) {
    double acc = 0.0;
    for (int c = 0; c < lab.cols(); ++c) {
      acc += slic_distance(pixel_feature(lab, depth, r, c),
                           clusters[static_cast<std::size_t>(labels(r, c))].center, p);
    }
    total += acc;
  }
  return total;
}

SegmentLabels segment(const Image& lab, const DepthMap& depth, const SlicParams& p) {
  p.validate();
  check_inputs(lab, depth);
  if (p.step > std::min(lab.rows(), lab.cols())) {
    throw Error(ErrorCode::kImageTooSmall, "slic step " + std::to_string(p.step) +
                                               " exceeds image size " +
                                               std::to_string(lab.rows()) + "x" +
                                               std::to_string(lab.cols()));
  }

  std::vector<PixelFeature> centers = initial_centers(lab, depth, p);
  SegmentLabels out;
  out.objective_history.reserve(static_cast<std::size_t>(p.max_iter));

  for (int iter = 0; iter < p.max_iter; ++iter) {
    double objective = 0.0;
    out.labels = assign_pixels(lab, depth, centers, p, &objective);
    out.objective_history.push_back(objective);

    std::vector<Cluster> updated =
        update_centers(lab, depth, out.labels, static_cast<int>(centers.size()));

    // Drop clusters that lost every member and compact the ids.
    std::vector<int> remap(updated.size(), -1);
    out.clusters.clear();
    for (std::size_t k = 0; k < updated.size(); ++k) {
      if (updated[k].count == 0) continue;
      remap[k] = static_cast<int>(out.clusters.size());
      out.clusters.push_back(updated[k]);
    }
    if (out.clusters.size() != updated.size()) {
      for (auto& label : out.labels.values()) label = remap[static_cast<std::size_t>(label)];
    }
    centers.clear();
    for (const auto& cl : out.clusters) centers.push_back(cl.center);
  }
  return out;
}

}  // namespace fsd
