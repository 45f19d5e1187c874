#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fsd/config.hpp"
#include "fsd/geometry.hpp"
#include "fsd/metrics.hpp"
#include "fsd/synth.hpp"

namespace fsd {

/// Inputs for one frame. Optional paths that are empty mean "not provided".
struct FrameBundle {
  std::string id;  // zero-padded frame number
  std::filesystem::path image;
  std::filesystem::path logits;
  std::filesystem::path net_depth;
  std::filesystem::path flow;  // this frame -> next frame
  std::filesystem::path vo;
  std::filesystem::path gt;
  std::optional<CameraIntrinsics> camera;
  std::optional<RelativePose> motion;  // this frame -> next frame
};

/// KITTI-raw style layout under `root`:
///   calib.txt                               fx fy cx cy width height
///   poses.txt                               absolute camera-to-world [R|t] per frame
///   image_02/data/<id>.png                  frames (their names define the ids)
///   logits/<id>.bin | net_depth/<id>.png    network output
///   flow/<id>.flo, vo/<id>.txt
///   proj_depth/groundtruth/image_02/<id>.png
/// and an optional manifest.txt with "<id> <field> <path>" lines that
/// override any of the per-frame paths (field is one of image, logits,
/// net_depth, flow, vo, gt; relative paths resolve against root).
/// Missing optional files leave the field empty.
std::vector<FrameBundle> load_dataset(const std::filesystem::path& root);

struct FrameReport {
  std::string id;
  std::vector<std::string> stages;  // stages that ran, in order
  std::string error;                // non-empty when the frame failed
  std::optional<DepthEvalResult> fused;
  std::optional<DepthEvalResult> unfused;
  std::size_t vo_points = 0;
  std::size_t vo_masked = 0;  // VO points dropped on dynamic pixels
  int segments = 0;
  double decode_seconds = 0.0;
  double mask_seconds = 0.0;
  double segment_seconds = 0.0;
  double optimize_seconds = 0.0;  // post-optimization: the outer solve and its application
  double eval_seconds = 0.0;

  bool ok() const { return error.empty(); }
};

struct PipelineResult {
  std::vector<FrameReport> frames;  // same order as the input
  std::optional<DepthEvalResult> fused;
  std::optional<DepthEvalResult> unfused;

  std::size_t failures() const;
};

struct RunOptions {
  int jobs = 1;
  /// When non-empty, writes depth/<id>.png, mask/<id>.png, metrics.tsv,
  /// report.txt and timing.tsv. Everything except timing.tsv depends only on
  /// the inputs and the config.
  std::filesystem::path output;
};

/// Runs decode, mask, segment, fuse and eval for each frame. Stages whose
/// inputs are absent are skipped; per-frame errors are recorded in the
/// report and never abort the batch. Throws for an invalid config or an
/// empty frame list.
PipelineResult run_pipeline(const Config& config, const std::vector<FrameBundle>& frames,
                            const RunOptions& options = {});

/// Writes `n_frames` scenes rendered from `base` with seeds seed + i in the
/// dataset layout read by load_dataset: images, network depth, flow, VO,
/// ground truth, calibration and n_frames + 1 absolute poses chained by the
/// scene motion.
void write_synth_dataset(const std::filesystem::path& root, const SceneSpec& base, int n_frames,
                         std::uint64_t seed);

std::string frame_id(int index);

}  // namespace fsd
