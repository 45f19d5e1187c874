#include "fsd/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>

#include "fsd/error.hpp"
#include "fsd/parallel.hpp"

namespace fsd {
namespace {

void invalid(const std::string& why) { throw Error(ErrorCode::kInvalidSpec, why); }

int region_at(const SceneSpec& spec, double x, double y) {
  for (int k = static_cast<int>(spec.layout.size()) - 1; k >= 0; --k) {
    if (spec.layout[static_cast<std::size_t>(k)].rect.contains(x, y)) return k;
  }
  return static_cast<int>(spec.layout.size());
}

const PlaneRegion& plane(const SceneSpec& spec, int k) {
  return k < static_cast<int>(spec.layout.size()) ? spec.layout[static_cast<std::size_t>(k)]
                                                  : spec.background;
}

}  // namespace

Eigen::Vector3d Texture::at(double x, double y) const {
  switch (kind) {
    case Kind::kSolid:
      return color_a;
    case Kind::kChecker: {
      const auto cx = static_cast<long>(std::floor(x / period_px));
      const auto cy = static_cast<long>(std::floor(y / period_px));
      return ((cx + cy) % 2 == 0) ? color_a : color_b;
    }
    case Kind::kGradient: {
      const double t = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (x + 0.5 * y) / period_px);
      return (1.0 - t) * color_a + t * color_b;
    }
  }
  return color_a;
}

void SceneSpec::validate() const {
  try {
    camera.validate();
    motion.validate(1e-9);
  } catch (const Error& e) {
    invalid(e.what());
  }
  if (!(d_min > 0.0) || !(d_max > d_min)) invalid("depth range requires 0 < d_min < d_max");
  auto check_plane = [&](const PlaneRegion& p, const std::string& name) {
    if (!(p.depth >= d_min && p.depth <= d_max)) invalid(name + " depth outside [d_min, d_max]");
    if (!(p.scale_factor > 0.0)) invalid(name + " scale factor must be positive");
    if (p.texture.kind != Texture::Kind::kSolid && !(p.texture.period_px > 0.0)) {
      invalid(name + " texture period must be positive");
    }
  };
  check_plane(background, "background");
  for (std::size_t k = 0; k < layout.size(); ++k) {
    check_plane(layout[k], "region " + std::to_string(k));
    if (layout[k].rect.x1 <= layout[k].rect.x0 || layout[k].rect.y1 <= layout[k].rect.y0) {
      invalid("region " + std::to_string(k) + " has an empty rectangle");
    }
  }
  if (!(noise.vo_dropout >= 0.0 && noise.vo_dropout < 1.0)) invalid("dropout must be in [0, 1)");
  if (!(noise.vo_sigma >= 0.0)) invalid("VO noise must be non-negative");
  if (noise.vo_samples < 0) invalid("VO sample count must be non-negative");
  if (!(noise.texture_noise >= 0.0)) invalid("texture noise must be non-negative");
}

RenderedScene render(const SceneSpec& spec) {
  spec.validate();
  const int rows = spec.camera.height;
  const int cols = spec.camera.width;
  const auto& k = spec.camera;
  const auto& pose = spec.motion;

  RenderedScene out{Image(rows, cols, 3), Image(rows, cols, 3), DepthMap(rows, cols),
                    FlowField(rows, cols, 2), LabelMap(rows, cols), Mask(rows, cols, 1, 0)};

  // Per-pixel texture noise drawn once in raster order so it is independent of
  // threading.
  Grid<double> grain(rows, cols, 3, 0.0);
  if (spec.noise.texture_noise > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, spec.noise.texture_noise);
    for (double& v : grain.values()) v = normal(rng);
  }
  auto shade = [&](const Eigen::Vector3d& base, int r, int c, std::span<double> dst) {
    for (int ch = 0; ch < 3; ++ch) dst[ch] = std::clamp(base[ch] + grain(r, c, ch), 0.0, 1.0);
  };

  parallel_for(0, rows, [&](int r) {
    for (int c = 0; c < cols; ++c) {
      const int reg = region_at(spec, static_cast<double>(c), static_cast<double>(r));
      const PlaneRegion& p = plane(spec, reg);
      out.region(r, c) = reg;
      out.depth(r, c) = p.depth;
      shade(p.texture.at(c, r), r, c, out.image_a.pixel(r, c));

      const Eigen::Vector3d x_b = pose.transform(k.back_project(Eigen::Vector2d(c, r), p.depth));
      Eigen::Vector2d flow(std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN());
      if (x_b.z() > 0.0) flow = k.project(x_b) - Eigen::Vector2d(c, r);
      for (const auto& dyn : spec.dynamic_regions) {
        if (dyn.rect.contains(c, r)) {
          flow += dyn.motion_px;
          out.dynamic(r, c) = 1;
        }
      }
      out.flow(r, c, 0) = flow.x();
      out.flow(r, c, 1) = flow.y();
    }
  });

  // Source frame: cast each source ray against every plane, keep the nearest
  // hit whose base-frame footprint belongs to that plane.
  const Eigen::Matrix3d rt = pose.rotation.transpose();
  const Eigen::Vector3d rt_t = rt * pose.translation;
  const Eigen::Matrix3d k_inv = k.inverse_matrix();
  const int n_planes = static_cast<int>(spec.layout.size()) + 1;
  parallel_for(0, rows, [&](int r) {
    for (int c = 0; c < cols; ++c) {
      const Eigen::Vector3d dir = rt * (k_inv * Eigen::Vector3d(c, r, 1.0));
      double best_s = std::numeric_limits<double>::infinity();
      Eigen::Vector3d color = spec.background.texture.at(c, r);
      Eigen::Vector2d hit_px(c, r);
      if (dir.z() > 0.0) {
        for (int reg = 0; reg < n_planes; ++reg) {
          const PlaneRegion& p = plane(spec, reg);
          const double s = (p.depth + rt_t.z()) / dir.z();
          if (!(s > 0.0) || s >= best_s) continue;
          const Eigen::Vector3d x_a = s * dir - rt_t;
          // Snap roundoff so pixel-centered reprojections sample the same texel.
          const Eigen::Vector2d uv = k.project(x_a).unaryExpr([](double v) {
            const double n = std::round(v);
            return std::abs(v - n) < 1e-9 ? n : v;
          });
          if (region_at(spec, uv.x(), uv.y()) != reg) continue;
          best_s = s;
          color = p.texture.at(uv.x(), uv.y());
          hit_px = uv;
        }
      }
      const int gr = std::clamp(static_cast<int>(std::lround(hit_px.y())), 0, rows - 1);
      const int gc = std::clamp(static_cast<int>(std::lround(hit_px.x())), 0, cols - 1);
      shade(color, gr, gc, out.image_b.pixel(r, c));
    }
  });

  // Independently moving content is pasted at its displaced location.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (out.dynamic(r, c) == 0) continue;
      const long tr = std::lround(r + out.flow(r, c, 1));
      const long tc = std::lround(c + out.flow(r, c, 0));
      if (tr < 0 || tr >= rows || tc < 0 || tc >= cols) continue;
      auto src = out.image_a.pixel(r, c);
      auto dst = out.image_b.pixel(static_cast<int>(tr), static_cast<int>(tc));
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

CorruptedDepth corrupt(const RenderedScene& scene, const SceneSpec& spec) {
  spec.validate();
  const int rows = scene.depth.rows();
  const int cols = scene.depth.cols();
  CorruptedDepth out{DepthMap(rows, cols), {}};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out.net_depth(r, c) = scene.depth(r, c) * plane(spec, scene.region(r, c)).scale_factor;
    }
  }

  std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_int_distribution<int> pick_row(0, rows - 1);
  std::uniform_int_distribution<int> pick_col(0, cols - 1);
  std::bernoulli_distribution drop(spec.noise.vo_dropout);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::map<std::pair<int, int>, double> chosen;  // (row, col) -> depth, ordered
  for (int i = 0; i < spec.noise.vo_samples; ++i) {
    const int r = pick_row(rng);
    const int c = pick_col(rng);
    const bool dropped = drop(rng);
    const double noise = normal(rng);
    if (dropped || scene.dynamic(r, c) != 0) continue;
    const double d = scene.depth(r, c) * std::exp(spec.noise.vo_sigma * noise);
    auto [it, inserted] = chosen.emplace(std::make_pair(r, c), d);
    if (!inserted) it->second = std::min(it->second, d);
  }
  out.vo.points.reserve(chosen.size());
  for (const auto& [px, d] : chosen) out.vo.points.push_back({px.second, px.first, d});
  return out;
}

SceneSpec standard_scene(std::uint64_t seed) {
  SceneSpec spec;
  spec.camera = {371.2, 368.64, 319.5, 95.5, 640, 192};
  const double yaw = 0.5 * std::numbers::pi / 180.0;
  spec.motion.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  spec.motion.translation = Eigen::Vector3d(0.05, 0.0, -0.8);

  spec.background.rect = {0, 0, 640, 192};
  spec.background.depth = 60.0;
  spec.background.texture = {Texture::Kind::kSolid, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, 1.0};

  auto quadrant = [](PixelRect rect, double depth, Texture tex, double scale) {
    return PlaneRegion{rect, depth, tex, scale};
  };
  spec.layout = {
      quadrant({0, 0, 320, 96}, 8.0,
               {Texture::Kind::kChecker, {0.80, 0.25, 0.20}, {0.66, 0.20, 0.16}, 12.0}, 0.6),
      quadrant({320, 0, 640, 96}, 15.0,
               {Texture::Kind::kChecker, {0.20, 0.35, 0.80}, {0.15, 0.28, 0.66}, 10.0}, 1.8),
      quadrant({0, 96, 320, 192}, 25.0,
               {Texture::Kind::kGradient, {0.25, 0.70, 0.25}, {0.15, 0.55, 0.20}, 40.0}, 0.75),
      quadrant({320, 96, 640, 192}, 40.0,
               {Texture::Kind::kChecker, {0.85, 0.80, 0.25}, {0.70, 0.66, 0.20}, 14.0}, 1.4),
  };
  spec.dynamic_regions = {{{64, 24, 144, 72}, Eigen::Vector2d(0.0, 20.0)}};
  spec.noise = {0.05, 0.5, 4000, 0.01};
  spec.seed = seed;
  return spec;
}

}  // namespace fsd
