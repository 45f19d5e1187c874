#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "fsd/parallel.hpp"
#include "fsd/slic3d.hpp"
#include "test_util.hpp"

namespace fsd {
namespace {

TEST(Lab, ReferenceColors) {
  const auto white = rgb_to_lab(Eigen::Vector3d(1.0, 1.0, 1.0));
  EXPECT_NEAR(white[0], 100.0, 1e-3);
  EXPECT_NEAR(white[1], 0.0, 1e-2);
  EXPECT_NEAR(white[2], 0.0, 1e-2);
  const auto black = rgb_to_lab(Eigen::Vector3d::Zero());
  EXPECT_NEAR(black.norm(), 0.0, 1e-12);
  // Pure sRGB red, widely tabulated as roughly (53.24, 80.09, 67.20).
  const auto red = rgb_to_lab(Eigen::Vector3d(1.0, 0.0, 0.0));
  EXPECT_NEAR(red[0], 53.24, 0.05);
  EXPECT_NEAR(red[1], 80.09, 0.05);
  EXPECT_NEAR(red[2], 67.20, 0.05);
}

TEST(Lab, RoundTrip) {
  std::mt19937_64 rng(1);
  const Image rgb = test::random_image(10, 10, rng);
  const Image back = lab_to_rgb(rgb_to_lab(rgb));
  for (std::size_t i = 0; i < rgb.values().size(); ++i) {
    EXPECT_NEAR(back.values()[i], rgb.values()[i], 1e-9);
  }
}

TEST(Distance, WeightedSumOfNorms) {
  const PixelFeature a{{50, 10, -5}, {3, 4}, 10.0};
  const PixelFeature b{{47, 14, -5}, {0, 0}, 12.5};
  SlicParams p;
  p.lambda_lab = 0.5;
  p.lambda_d = 2.0;
  p.lambda_pix = 0.25;
  EXPECT_DOUBLE_EQ(slic_distance(a, b, p), 0.5 * 5 + 2.0 * 2.5 + 0.25 * 5);
}

struct Scene {
  Image lab;
  DepthMap depth;
};

Scene random_scene(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {rgb_to_lab(test::random_image(rows, cols, rng)), test::random_depth(rows, cols, rng)};
}

// Reference: lowest-index argmin over every center.
LabelMap brute_force(const Scene& s, std::span<const PixelFeature> centers, const SlicParams& p) {
  LabelMap out(s.lab.rows(), s.lab.cols());
  for (int r = 0; r < s.lab.rows(); ++r) {
    for (int c = 0; c < s.lab.cols(); ++c) {
      const auto f = pixel_feature(s.lab, s.depth, r, c);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = slic_distance(f, centers[k], p);
        if (d < best) {
          best = d;
          out(r, c) = static_cast<int>(k);
        }
      }
    }
  }
  return out;
}

TEST(Assign, MatchesBruteForceInBothModes) {
  const Scene s = random_scene(32, 32, 5);
  SlicParams p;
  p.step = 8;
  p.lambda_pix = 1.0 / 8;
  auto centers = initial_centers(s.lab, s.depth, p);
  ASSERT_EQ(centers.size(), 16u);
  const LabelMap expected = brute_force(s, centers, p);
  EXPECT_EQ(assign_pixels(s.lab, s.depth, centers, p), expected);
  p.exhaustive = true;
  EXPECT_EQ(assign_pixels(s.lab, s.depth, centers, p), expected);
}

TEST(Assign, WindowFallbackWhenColorDominates) {
  // Heavy color weight makes far centers competitive; the window alone would
  // miss them.
  const Scene s = random_scene(40, 40, 6);
  SlicParams p;
  p.step = 5;
  p.lambda_lab = 10.0;
  p.lambda_pix = 0.01;
  const auto centers = initial_centers(s.lab, s.depth, p);
  EXPECT_EQ(assign_pixels(s.lab, s.depth, centers, p), brute_force(s, centers, p));
}

TEST(Assign, ObjectiveIsSumOfBestCosts) {
  const Scene s = random_scene(16, 16, 7);
  SlicParams p;
  p.step = 4;
  const auto centers = initial_centers(s.lab, s.depth, p);
  double objective = 0.0;
  const LabelMap labels = assign_pixels(s.lab, s.depth, centers, p, &objective);
  double expected = 0.0;
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      expected += slic_distance(pixel_feature(s.lab, s.depth, r, c), centers[labels(r, c)], p);
    }
  }
  EXPECT_NEAR(objective, expected, 1e-9 * expected);
}

TEST(Initial, CentersFormAGrid) {
  const Scene s = random_scene(32, 48, 8);
  SlicParams p;
  p.step = 16;
  const auto centers = initial_centers(s.lab, s.depth, p);
  ASSERT_EQ(centers.size(), 6u);
  EXPECT_DOUBLE_EQ(centers[0].xy.x(), 7.5);
  EXPECT_DOUBLE_EQ(centers[0].xy.y(), 7.5);
  EXPECT_DOUBLE_EQ(centers[5].xy.x(), 39.5);
  EXPECT_DOUBLE_EQ(centers[5].xy.y(), 23.5);
}

TEST(Segment, CentersAreMeansOfTheirMembers) {
  const Scene s = random_scene(32, 32, 9);
  SlicParams p;
  p.step = 8;
  p.lambda_pix = 1.0 / 8;
  const auto seg = segment(s.lab, s.depth, p);
  std::vector<Eigen::VectorXd> sums(seg.clusters.size(), Eigen::VectorXd::Zero(7));
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      const auto f = pixel_feature(s.lab, s.depth, r, c);
      auto& acc = sums[static_cast<std::size_t>(seg.labels(r, c))];
      acc.head<3>() += f.lab;
      acc.segment<2>(3) += f.xy;
      acc[5] += f.depth;
      acc[6] += 1.0;
    }
  }
  for (std::size_t k = 0; k < seg.clusters.size(); ++k) {
    const auto& cl = seg.clusters[k];
    ASSERT_GT(cl.count, 0u);
    EXPECT_EQ(static_cast<double>(cl.count), sums[k][6]);
    const double n = sums[k][6];
    EXPECT_NEAR((cl.center.lab - sums[k].head<3>() / n).norm(), 0.0, 1e-9);
    EXPECT_NEAR((cl.center.xy - sums[k].segment<2>(3) / n).norm(), 0.0, 1e-9);
    EXPECT_NEAR(cl.center.depth, sums[k][5] / n, 1e-9);
  }
}

TEST(Segment, LabelsAreCompactAndHistoryHasOneEntryPerIteration) {
  const Scene s = random_scene(24, 24, 10);
  SlicParams p;
  p.step = 6;
  p.max_iter = 7;
  const auto seg = segment(s.lab, s.depth, p);
  EXPECT_EQ(seg.objective_history.size(), 7u);
  std::set<int> used(seg.labels.values().begin(), seg.labels.values().end());
  EXPECT_EQ(static_cast<int>(used.size()), seg.size());
  EXPECT_EQ(*used.begin(), 0);
  EXPECT_EQ(*used.rbegin(), seg.size() - 1);
}

TEST(Segment, UniformImageKeepsGridCells) {
  // On a constant image only the spatial term matters; the initial grid is a
  // fixed point.
  const Image lab(32, 32, 3, 50.0);
  const DepthMap depth(32, 32, 1, 10.0);
  SlicParams p;
  p.step = 8;
  const auto seg = segment(lab, depth, p);
  ASSERT_EQ(seg.size(), 16);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) EXPECT_EQ(seg.labels(r, c), (r / 8) * 4 + c / 8);
  }
}

TEST(Segment, DepthEdgeSplitsColorlessScene) {
  // Two depth layers with identical color: boundaries follow depth.
  const Image lab(32, 32, 3, 50.0);
  DepthMap depth(32, 32, 1, 5.0);
  for (int r = 0; r < 32; ++r) {
    for (int c = 12; c < 32; ++c) depth(r, c) = 40.0;
  }
  SlicParams p;
  p.step = 8;
  const auto seg = segment(lab, depth, p);
  for (const auto& cl : seg.clusters) {
    EXPECT_TRUE(cl.center.depth == 5.0 || cl.center.depth == 40.0) << cl.center.depth;
  }
}

TEST(Segment, DeterministicAcrossThreadCounts) {
  const Scene s = random_scene(64, 64, 11);
  SlicParams p;
  set_default_thread_count(1);
  const auto a = segment(s.lab, s.depth, p);
  set_default_thread_count(4);
  const auto b = segment(s.lab, s.depth, p);
  set_default_thread_count(0);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.objective_history, b.objective_history);
}

TEST(Segment, Errors) {
  const Scene s = random_scene(8, 8, 12);
  SlicParams p;
  p.step = 9;
  EXPECT_FSD_ERROR(segment(s.lab, s.depth, p), ErrorCode::kImageTooSmall);
  p.step = 4;
  EXPECT_FSD_ERROR(segment(s.lab, DepthMap(8, 7, 1, 1.0), p), ErrorCode::kShapeMismatch);
  DepthMap bad = s.depth;
  bad(3, 3) = 0.0;
  EXPECT_FSD_ERROR(segment(s.lab, bad, p), ErrorCode::kNonPositiveDepth);
  p.max_iter = 0;
  EXPECT_FSD_ERROR(segment(s.lab, s.depth, p), ErrorCode::kInvalidArgument);
}

// Distances are unsquared norms, so the mean is not the cost-minimizing
// center and an update step can raise the objective.
TEST(Segment, MeanUpdateCanRaiseUnsquaredObjective) {
  const Image lab(1, 3, 3, 50.0);
  DepthMap depth(1, 3, 1, 1.0);
  depth(0, 2) = 10.0;
  const LabelMap labels(1, 3, 1, 0);
  SlicParams p;
  p.lambda_lab = 0.0;
  p.lambda_pix = 0.0;
  p.lambda_d = 1.0;
  std::vector<Cluster> at_median{{pixel_feature(lab, depth, 0, 0), 3}};
  const auto at_mean = update_centers(lab, depth, labels, 1);
  EXPECT_DOUBLE_EQ(at_mean[0].center.depth, 4.0);
  EXPECT_DOUBLE_EQ(segmentation_objective(lab, depth, labels, at_median, p), 9.0);
  EXPECT_DOUBLE_EQ(segmentation_objective(lab, depth, labels, at_mean, p), 12.0);
}

}  // namespace
}  // namespace fsd
