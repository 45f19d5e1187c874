#include "fsd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fsd/depth_codec.hpp"
#include "fsd/error.hpp"
#include "fsd/flow_mask.hpp"
#include "fsd/fusion.hpp"
#include "fsd/io.hpp"
#include "fsd/parallel.hpp"
#include "fsd/slic3d.hpp"

namespace fs = std::filesystem;

namespace fsd {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path if_exists(const fs::path& p) { return fs::exists(p) ? p : fs::path(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string metric_cells(const std::optional<DepthEvalResult>& r) {
  if (!r) return "-\t-\t-\t-\t-\t-\t-\t0";
  return fmt(r->abs_rel) + '\t' + fmt(r->sq_rel) + '\t' + fmt(r->rmse) + '\t' +
         fmt(r->rmse_log) + '\t' + fmt(r->delta1) + '\t' + fmt(r->delta2) + '\t' +
         fmt(r->delta3) + '\t' + std::to_string(r->n_pixels);
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

void apply_manifest(const fs::path& root, std::vector<FrameBundle>& frames) {
  const fs::path manifest = root / "manifest.txt";
  if (!fs::exists(manifest)) return;
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + manifest.string());
  std::map<std::string, FrameBundle*> by_id;
  for (auto& f : frames) by_id[f.id] = &f;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string id, field, path, extra;
    if (!(fields >> id)) continue;
    const std::string where = manifest.string() + ":" + std::to_string(line_no);
    if (!(fields >> field >> path) || (fields >> extra)) {
      throw Error(ErrorCode::kParseError, where + ": expected '<id> <field> <path>'");
    }
    if (!by_id.contains(id)) {
      frames.emplace_back().id = id;
      // push_back may reallocate, so rebuild the index.
      for (auto& f : frames) by_id[f.id] = &f;
    }
    FrameBundle& f = *by_id[id];
    const fs::path resolved = fs::path(path).is_absolute() ? fs::path(path) : root / path;
    if (field == "image") f.image = resolved;
    else if (field == "logits") f.logits = resolved;
    else if (field == "net_depth") f.net_depth = resolved;
    else if (field == "flow") f.flow = resolved;
    else if (field == "vo") f.vo = resolved;
    else if (field == "gt") f.gt = resolved;
    else throw Error(ErrorCode::kParseError, where + ": unknown field '" + field + "'");
  }
}

DepthMap network_depth(const Config& cfg, const FrameBundle& f, const CameraIntrinsics* camera) {
  if (!f.logits.empty()) {
    const LogitsMap logits = load_logits(f.logits);
    if (logits.channels() != cfg.depth.n_bins) {
      throw Error(ErrorCode::kChannelMismatch,
                  "logits carry " + std::to_string(logits.channels()) + " channels, config has " +
                      std::to_string(cfg.depth.n_bins));
    }
    if (cfg.depth.n_bins == 1) return decode_sigmoid(logits, cfg.depth.d_min, cfg.depth.d_max);
    BinSpec bins = make_bins(cfg.depth.d_min, cfg.depth.d_max, cfg.depth.n_bins);
    if (cfg.depth.f_base > 0.0) {
      if (camera == nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "bin adaptation needs intrinsics");
      }
      bins = adapt_bins_to_camera(bins, camera->fx, cfg.depth.f_base);
    }
    return decode_multichannel(logits, bins);
  }
  if (!f.net_depth.empty()) return load_depth_png(f.net_depth);
  throw Error(ErrorCode::kInvalidArgument, "frame has neither logits nor network depth");
}

FrameReport process_frame(const Config& cfg, const FrameBundle& f, const RunOptions& options) {
  FrameReport rep;
  rep.id = f.id;
  const Image rgb = load_image(f.image);
  const CameraIntrinsics* camera = f.camera ? &*f.camera : nullptr;

  auto t0 = Clock::now();
  const DepthMap net = network_depth(cfg, f, camera);
  if (!net.same_shape(rgb)) throw Error(ErrorCode::kShapeMismatch, "depth and image sizes differ");
  rep.decode_seconds = seconds_since(t0);
  rep.stages.push_back("decode");

  Mask static_mask;
  if (!f.flow.empty() && f.motion && camera != nullptr) {
    t0 = Clock::now();
    const FlowField flow = load_flow(f.flow);
    if (!flow.same_shape(rgb)) throw Error(ErrorCode::kShapeMismatch, "flow and image sizes differ");
    const FundamentalMatrix fm = fundamental_from_pose(*camera, *f.motion);
    static_mask = build_static_mask(epipolar_deviation(flow, fm), cfg.mask.threshold_px);
    rep.mask_seconds = seconds_since(t0);
    rep.stages.push_back("mask");
  }

  SparseDepthMap vo;
  if (!f.vo.empty()) {
    const SparseDepthMap raw = load_vo_points(f.vo, rgb.cols(), rgb.rows());
    for (const auto& p : raw.points) {
      if (!static_mask.empty() && static_mask(p.v, p.u) == 0) {
        ++rep.vo_masked;
        continue;
      }
      vo.points.push_back(p);
    }
    rep.vo_points = vo.points.size();
  }

  t0 = Clock::now();
  SegmentLabels seg = segment(rgb_to_lab(rgb), net, cfg.slic);
  rep.segment_seconds = seconds_since(t0);
  rep.segments = seg.size();
  rep.stages.push_back("segment");

  DepthMap fused = net;
  if (!f.vo.empty()) {
    FusionResult res =
        fuse_segments(net, std::move(seg), vo, cfg.fusion, cfg.depth.d_min, cfg.depth.d_max);
    rep.optimize_seconds = res.optimize_seconds;
    fused = std::move(res.depth);
    rep.stages.push_back("fuse");
  }

  if (!f.gt.empty()) {
    t0 = Clock::now();
    const DepthMap gt = load_depth_png(f.gt);
    rep.fused = evaluate(fused, gt, {}, cfg.eval);
    rep.unfused = evaluate(net, gt, {}, cfg.eval);
    rep.eval_seconds = seconds_since(t0);
    rep.stages.push_back("eval");
  }

  if (!options.output.empty()) {
    save_depth_png(options.output / "depth" / (f.id + ".png"), fused);
    if (!static_mask.empty()) save_mask_png(options.output / "mask" / (f.id + ".png"), static_mask);
  }
  return rep;
}

void write_reports(const fs::path& dir, const PipelineResult& result) {
  const std::string header =
      "abs_rel\tsq_rel\trmse\trmse_log\td1\td2\td3\tn";
  {
    std::ofstream out(dir / "metrics.tsv");
    out << "frame\tvariant\t" << header << '\n';
    for (const auto& f : result.frames) {
      if (!f.ok()) continue;
      if (f.fused) out << f.id << "\tfused\t" << metric_cells(f.fused) << '\n';
      if (f.unfused) out << f.id << "\tunfused\t" << metric_cells(f.unfused) << '\n';
    }
    if (result.fused) out << "all\tfused\t" << metric_cells(result.fused) << '\n';
    if (result.unfused) out << "all\tunfused\t" << metric_cells(result.unfused) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "cannot write metrics.tsv");
  }
  {
    std::ofstream out(dir / "report.txt");
    out << "frames " << result.frames.size() << '\n'
        << "failures " << result.failures() << '\n';
    for (const auto& f : result.frames) {
      out << "frame " << f.id;
      if (f.ok()) {
        out << " ok stages=" << join(f.stages, ',') << " segments=" << f.segments
            << " vo=" << f.vo_points << " vo_masked=" << f.vo_masked << '\n';
      } else {
        out << " error " << f.error << '\n';
      }
    }
    if (result.fused) out << "aggregate fused\t" << metric_cells(result.fused) << '\n';
    if (result.unfused) out << "aggregate unfused\t" << metric_cells(result.unfused) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "cannot write report.txt");
  }
  {
    std::ofstream out(dir / "timing.tsv");
    out << "frame\tdecode_s\tmask_s\tsegment_s\toptimize_s\teval_s\n";
    for (const auto& f : result.frames) {
      out << f.id << '\t' << fmt(f.decode_seconds) << '\t' << fmt(f.mask_seconds) << '\t'
          << fmt(f.segment_seconds) << '\t' << fmt(f.optimize_seconds) << '\t'
          << fmt(f.eval_seconds) << '\n';
    }
    if (!out) throw Error(ErrorCode::kIo, "cannot write timing.tsv");
  }
}

}  // namespace

std::string frame_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%010d", index);
  return buf;
}

std::size_t PipelineResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(frames.begin(), frames.end(), [](const FrameReport& f) { return !f.ok(); }));
}

std::vector<FrameBundle> load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIo, root.string() + " is not a directory");
  std::vector<FrameBundle> frames;
  const fs::path image_dir = root / "image_02" / "data";
  if (fs::is_directory(image_dir)) {
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
      if (entry.path().extension() == ".png") images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    for (const auto& img : images) {
      FrameBundle f;
      f.id = img.stem().string();
      f.image = img;
      f.logits = if_exists(root / "logits" / (f.id + ".bin"));
      f.net_depth = if_exists(root / "net_depth" / (f.id + ".png"));
      f.flow = if_exists(root / "flow" / (f.id + ".flo"));
      f.vo = if_exists(root / "vo" / (f.id + ".txt"));
      f.gt = if_exists(root / "proj_depth" / "groundtruth" / "image_02" / (f.id + ".png"));
      frames.push_back(std::move(f));
    }
  }
  apply_manifest(root, frames);

  std::optional<CameraIntrinsics> camera;
  if (fs::exists(root / "calib.txt")) camera = load_intrinsics(root / "calib.txt");
  std::vector<RelativePose> poses;
  if (fs::exists(root / "poses.txt")) poses = load_pose_file(root / "poses.txt");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].camera = camera;
    // Poses are indexed by frame position; the motion to the next frame
    // maps this frame's coordinates into the next one's.
    if (i + 1 < poses.size()) frames[i].motion = relative_pose(poses[i + 1], poses[i]);
  }
  return frames;
}

PipelineResult run_pipeline(const Config& config, const std::vector<FrameBundle>& frames,
                            const RunOptions& options) {
  config.validate();
  if (frames.empty()) throw Error(ErrorCode::kEmptyList, "no frames to process");
  if (!options.output.empty()) {
    fs::create_directories(options.output / "depth");
    fs::create_directories(options.output / "mask");
  }

  PipelineResult result;
  result.frames.resize(frames.size());
  parallel_for(
      0, static_cast<int>(frames.size()),
      [&](int i) {
        const auto& f = frames[static_cast<std::size_t>(i)];
        FrameReport& rep = result.frames[static_cast<std::size_t>(i)];
        try {
          rep = process_frame(config, f, options);
        } catch (const std::exception& e) {
          rep = FrameReport{};
          rep.id = f.id;
          rep.error = e.what();
        }
      },
      std::max(1, options.jobs));

  std::vector<DepthEvalResult> fused, unfused;
  for (const auto& f : result.frames) {
    if (f.fused) fused.push_back(*f.fused);
    if (f.unfused) unfused.push_back(*f.unfused);
  }
  if (!fused.empty()) result.fused = aggregate(fused);
  if (!unfused.empty()) result.unfused = aggregate(unfused);
  if (!options.output.empty()) write_reports(options.output, result);
  return result;
}

void write_synth_dataset(const fs::path& root, const SceneSpec& base, int n_frames,
                         std::uint64_t seed) {
  if (n_frames < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one frame");
  base.validate();
  for (const char* sub : {"image_02/data", "net_depth", "flow", "vo",
                          "proj_depth/groundtruth/image_02"}) {
    fs::create_directories(root / sub);
  }
  save_intrinsics(root / "calib.txt", base.camera);

  std::vector<RelativePose> poses{RelativePose::identity()};
  for (int i = 0; i < n_frames; ++i) poses.push_back(compose(poses.back(), base.motion.inverse()));
  save_pose_file(root / "poses.txt", poses);

  for (int i = 0; i < n_frames; ++i) {
    SceneSpec spec = base;
    spec.seed = seed + static_cast<std::uint64_t>(i);
    const RenderedScene scene = render(spec);
    const CorruptedDepth corrupted = corrupt(scene, spec);
    const std::string id = frame_id(i);
    save_image(root / "image_02" / "data" / (id + ".png"), scene.image_a);
    save_depth_png(root / "net_depth" / (id + ".png"), corrupted.net_depth);
    save_depth_png(root / "proj_depth" / "groundtruth" / "image_02" / (id + ".png"), scene.depth);
    save_flow(root / "flow" / (id + ".flo"), scene.flow);
    save_vo_points(root / "vo" / (id + ".txt"), corrupted.vo);
  }
  std::ofstream seeds(root / "seed.txt");
  seeds << seed << '\n';
}

}  // namespace fsd
