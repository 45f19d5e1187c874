#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "fsd/depth_codec.hpp"
#include "fsd/flow_mask.hpp"
#include "fsd/fusion.hpp"
#include "fsd/slic3d.hpp"
#include "fsd/synth.hpp"

namespace {

std::vector<fsd::SegmentSummary> random_summaries(int n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<fsd::SegmentSummary> s(static_cast<std::size_t>(n));
  for (auto& seg : s) {
    seg.lg0 = std::log(1.0 + 60.0 * u(rng));
    seg.has_vo = u(rng) < 0.5;
    seg.vo_count = seg.has_vo ? 4 : 0;
    seg.lg_tar = seg.lg0 + 0.3 * (u(rng) - 0.5);
  }
  return s;
}

void BM_SolveOuterShermanMorrison(benchmark::State& state) {
  const auto s = random_summaries(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fsd::solve_outer(s, {}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveOuterShermanMorrison)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_SolveOuterDense(benchmark::State& state) {
  const auto s = random_summaries(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fsd::solve_outer_dense(s, {}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveOuterDense)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

struct Frame {
  fsd::RenderedScene scene;
  fsd::CorruptedDepth input;
  fsd::Image lab;
};

const Frame& standard_frame() {
  static const Frame frame = [] {
    const auto spec = fsd::standard_scene();
    Frame f{fsd::render(spec), {}, {}};
    f.input = fsd::corrupt(f.scene, spec);
    f.lab = fsd::rgb_to_lab(f.scene.image_a);
    return f;
  }();
  return frame;
}

void BM_Segment(benchmark::State& state) {
  const auto& f = standard_frame();
  fsd::SlicParams p;
  p.exhaustive = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fsd::segment(f.lab, f.input.net_depth, p));
}
BENCHMARK(BM_Segment)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_FuseSegments(benchmark::State& state) {
  const auto& f = standard_frame();
  const auto seg = fsd::segment(f.lab, f.input.net_depth, {});
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsd::fuse_segments(f.input.net_depth, seg, f.input.vo, {}, 0.1, 100.0));
  }
}
BENCHMARK(BM_FuseSegments)->Unit(benchmark::kMillisecond);

void BM_EpipolarMask(benchmark::State& state) {
  const auto spec = fsd::standard_scene();
  const auto& f = standard_frame();
  const auto fm = fsd::fundamental_from_pose(spec.camera, spec.motion);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsd::build_static_mask(fsd::epipolar_deviation(f.scene.flow, fm)));
  }
}
BENCHMARK(BM_EpipolarMask)->Unit(benchmark::kMillisecond);

void BM_DecodeMultichannel(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 2.0);
  fsd::LogitsMap logits(192, 640, 64);
  for (double& v : logits.values()) v = n(rng);
  const auto bins = fsd::make_bins(0.1, 100.0, 64);
  for (auto _ : state) benchmark::DoNotOptimize(fsd::decode_multichannel(logits, bins));
}
BENCHMARK(BM_DecodeMultichannel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
