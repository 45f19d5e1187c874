// fsd: command-line front end for decoding, masking, segmentation, fusion,
// evaluation and synthetic data generation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fsd/config.hpp"
#include "fsd/depth_codec.hpp"
#include "fsd/error.hpp"
#include "fsd/flow_mask.hpp"
#include "fsd/fusion.hpp"
#include "fsd/io.hpp"
#include "fsd/metrics.hpp"
#include "fsd/parallel.hpp"
#include "fsd/pipeline.hpp"
#include "fsd/slic3d.hpp"
#include "fsd/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

struct Globals {
  std::string config_path;
  int jobs = 1;
  std::uint64_t seed = 7;
  std::string output;
};

fsd::Config load(const Globals& g) {
  return g.config_path.empty() ? fsd::Config{} : fsd::load_config(g.config_path);
}

fs::path require_output(const Globals& g, const char* what) {
  if (g.output.empty()) {
    throw fsd::Error(fsd::ErrorCode::kInvalidArgument, std::string("--output is required for ") + what);
  }
  return g.output;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string row(const fsd::DepthEvalResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%zu", r.abs_rel,
                r.sq_rel, r.rmse, r.rmse_log, r.delta1, r.delta2, r.delta3, r.n_pixels);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-scale depth: decode, mask, segment, fuse, evaluate"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Key-value config file")->check(CLI::ExistingFile);
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for synthetic data");
  app.add_option("--output,-o", g.output, "Output file or directory");

  // decode
  std::string logits_path;
  double fx = 0.0;
  auto* decode = app.add_subcommand("decode", "Decode logits into a depth PNG");
  decode->add_option("logits", logits_path, "Logits container (.bin)")->required()->check(CLI::ExistingFile);
  decode->add_option("--fx", fx, "Focal length for bin adaptation (needs depth.f_base)");

  // mask
  std::string flow_path, calib_path, poses_path;
  int pose_index = 0;
  auto* mask = app.add_subcommand("mask", "Epipolar static mask from optical flow");
  mask->add_option("flow", flow_path, "Flow file (.flo)")->required()->check(CLI::ExistingFile);
  mask->add_option("--calib", calib_path, "Intrinsics file")->required()->check(CLI::ExistingFile);
  mask->add_option("--poses", poses_path, "Absolute pose file")->required()->check(CLI::ExistingFile);
  mask->add_option("--frame", pose_index, "Index of the flow's base frame in the pose file");

  // segment
  std::string image_path, depth_path, stats_path;
  auto* seg = app.add_subcommand("segment", "Depth-aware superpixels");
  seg->add_option("image", image_path, "Color image")->required()->check(CLI::ExistingFile);
  seg->add_option("depth", depth_path, "Depth PNG")->required()->check(CLI::ExistingFile);
  seg->add_option("--stats", stats_path, "Per-cluster statistics text file");

  // fuse
  std::string vo_path;
  auto* fuse = app.add_subcommand("fuse", "Fuse network depth with sparse VO depth");
  fuse->add_option("image", image_path, "Color image")->required()->check(CLI::ExistingFile);
  fuse->add_option("depth", depth_path, "Network depth PNG")->required()->check(CLI::ExistingFile);
  fuse->add_option("vo", vo_path, "VO points (u v depth)")->required()->check(CLI::ExistingFile);

  // eval
  std::string pred_path, gt_path, eval_mask_path, report_path;
  auto* eval = app.add_subcommand("eval", "Depth metrics as one tab-separated row");
  eval->add_option("pred", pred_path, "Predicted depth PNG")->required()->check(CLI::ExistingFile);
  eval->add_option("gt", gt_path, "Ground-truth depth PNG")->required()->check(CLI::ExistingFile);
  eval->add_option("--mask", eval_mask_path, "Evaluation mask PNG")->check(CLI::ExistingFile);
  eval->add_option("--report", report_path, "Also write a key-value report");

  // synth
  int n_frames = 3;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--frames", n_frames, "Number of frames")->check(CLI::PositiveNumber);

  // run
  std::string dataset;
  auto* run = app.add_subcommand("run", "Full pipeline over a dataset directory");
  run->add_option("dataset", dataset, "Dataset root")->required()->check(CLI::ExistingDirectory);

  for (auto* sub : {decode, mask, seg, fuse, eval, synth, run}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitFatal;
  }

  try {
    fsd::set_default_thread_count(g.jobs);
    const fsd::Config cfg = load(g);
    cfg.validate();

    if (*decode) {
      const fsd::LogitsMap logits = fsd::load_logits(logits_path);
      fsd::DepthMap depth;
      if (logits.channels() == 1) {
        depth = fsd::decode_sigmoid(logits, cfg.depth.d_min, cfg.depth.d_max);
      } else {
        if (logits.channels() != cfg.depth.n_bins) {
          throw fsd::Error(fsd::ErrorCode::kChannelMismatch, "logit channels differ from depth.n_bins");
        }
        auto bins = fsd::make_bins(cfg.depth.d_min, cfg.depth.d_max, cfg.depth.n_bins);
        if (cfg.depth.f_base > 0.0 && fx > 0.0) bins = fsd::adapt_bins_to_camera(bins, fx, cfg.depth.f_base);
        depth = fsd::decode_multichannel(logits, bins);
      }
      const fs::path out = require_output(g, "decode");
      ensure_parent(out);
      fsd::save_depth_png(out, depth);
    } else if (*mask) {
      const auto k = fsd::load_intrinsics(calib_path);
      const auto poses = fsd::load_pose_file(poses_path);
      if (pose_index < 0 || static_cast<std::size_t>(pose_index) + 1 >= poses.size()) {
        throw fsd::Error(fsd::ErrorCode::kOutOfBounds, "pose file has no frame after --frame");
      }
      const auto motion = fsd::relative_pose(poses[static_cast<std::size_t>(pose_index) + 1],
                                             poses[static_cast<std::size_t>(pose_index)]);
      const auto flow = fsd::load_flow(flow_path);
      const auto dev = fsd::epipolar_deviation(flow, fsd::fundamental_from_pose(k, motion));
      const auto m = fsd::build_static_mask(dev, cfg.mask.threshold_px);
      const fs::path out = require_output(g, "mask");
      ensure_parent(out);
      fsd::save_mask_png(out, m);
    } else if (*seg) {
      const auto rgb = fsd::load_image(image_path);
      const auto depth = fsd::load_depth_png(depth_path);
      const auto labels = fsd::segment(fsd::rgb_to_lab(rgb), depth, cfg.slic);
      const fs::path out = require_output(g, "segment");
      ensure_parent(out);
      fsd::save_label_png(out, labels.labels);
      if (!stats_path.empty()) {
        std::ofstream s(stats_path);
        s << "# id L a b x y depth count\n";
        for (int i = 0; i < labels.size(); ++i) {
          const auto& c = labels.clusters[static_cast<std::size_t>(i)];
          s << i << ' ' << c.center.lab.x() << ' ' << c.center.lab.y() << ' ' << c.center.lab.z()
            << ' ' << c.center.xy.x() << ' ' << c.center.xy.y() << ' ' << c.center.depth << ' '
            << c.count << '\n';
        }
        if (!s) throw fsd::Error(fsd::ErrorCode::kIo, "cannot write " + stats_path);
      }
    } else if (*fuse) {
      const auto rgb = fsd::load_image(image_path);
      const auto depth = fsd::load_depth_png(depth_path);
      const auto vo = fsd::load_vo_points(vo_path, depth.cols(), depth.rows());
      const auto res = fsd::fuse(rgb, depth, vo, cfg.fusion_options());
      const fs::path out = require_output(g, "fuse");
      ensure_parent(out);
      fsd::save_depth_png(out, res.depth);
      std::fprintf(stderr, "segments %d, post-optimization %.4f s\n", res.segments.size(),
                   res.optimize_seconds);
    } else if (*eval) {
      const auto pred = fsd::load_depth_png(pred_path);
      const auto gt = fsd::load_depth_png(gt_path);
      const fsd::Mask m = eval_mask_path.empty() ? fsd::Mask{} : fsd::load_mask_png(eval_mask_path);
      const auto r = fsd::evaluate(pred, gt, m, cfg.eval);
      std::cout << row(r) << '\n';
      if (!report_path.empty()) {
        std::ofstream rep(report_path);
        rep << "abs_rel " << r.abs_rel << "\nsq_rel " << r.sq_rel << "\nrmse " << r.rmse
            << "\nrmse_log " << r.rmse_log << "\nd1 " << r.delta1 << "\nd2 " << r.delta2
            << "\nd3 " << r.delta3 << "\nn " << r.n_pixels << '\n';
        if (!rep) throw fsd::Error(fsd::ErrorCode::kIo, "cannot write " + report_path);
      }
    } else if (*synth) {
      const fs::path out = require_output(g, "synth");
      fsd::write_synth_dataset(out, fsd::standard_scene(g.seed), n_frames, g.seed);
    } else if (*run) {
      const fs::path out = require_output(g, "run");
      const auto frames = fsd::load_dataset(dataset);
      const auto result = fsd::run_pipeline(cfg, frames, {g.jobs, out});
      for (const auto& f : result.frames) {
        if (!f.ok()) std::cerr << "frame " << f.id << ": " << f.error << '\n';
      }
      if (result.unfused) std::cout << "unfused\t" << row(*result.unfused) << '\n';
      if (result.fused) std::cout << "fused\t" << row(*result.fused) << '\n';
      if (result.failures() > 0) return kExitPartial;
    }
  } catch (const std::exception& e) {
    std::cerr << "fsd: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitOk;
}
