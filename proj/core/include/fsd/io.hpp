#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fsd/depth_codec.hpp"
#include "fsd/flow_mask.hpp"
#include "fsd/fusion.hpp"
#include "fsd/geometry.hpp"
#include "fsd/grid.hpp"

namespace fsd {

/// 16-bit single-channel PNG, meters = raw / 256; raw 0 loads as depth 0
/// (invalid). Throws kIo or kBadFormat.
DepthMap load_depth_png(const std::filesystem::path& path);
/// Inverse of load_depth_png. Non-positive or non-finite depths are written
/// as 0 and values beyond 65535/256 m saturate.
void save_depth_png(const std::filesystem::path& path, const DepthMap& depth);

/// 8-bit color image to RGB in [0, 1].
Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& rgb);

/// 8-bit PNG, 255 where mask != 0.
void save_mask_png(const std::filesystem::path& path, const Mask& mask);
Mask load_mask_png(const std::filesystem::path& path);

/// 16-bit PNG of segment ids. Throws kBadFormat for ids outside [0, 65535].
void save_label_png(const std::filesystem::path& path, const LabelMap& labels);
LabelMap load_label_png(const std::filesystem::path& path);

/// "u v depth" per line, '#' starts a comment. Pixel coordinates are rounded
/// to the nearest integer; duplicates keep the nearest depth. Throws
/// kParseError (1-based line number in the message) or kOutOfBounds.
SparseDepthMap parse_vo_points(std::istream& in, int width, int height,
                               const std::string& source = "<stream>");
SparseDepthMap load_vo_points(const std::filesystem::path& path, int width, int height);
void save_vo_points(const std::filesystem::path& path, const SparseDepthMap& vo);

/// One row-major 3x4 [R|t] per non-empty line. Rotations within 1e-3 of a
/// proper rotation are projected onto it; anything else is kNotARotation.
std::vector<RelativePose> parse_pose_lines(std::istream& in,
                                           const std::string& source = "<stream>");
std::vector<RelativePose> load_pose_file(const std::filesystem::path& path);
void save_pose_file(const std::filesystem::path& path, std::span<const RelativePose> poses);

/// "fx fy cx cy width height" on the first non-comment line.
CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

/// Middlebury .flo: float32 tag 202021.25, int32 width, int32 height, then
/// interleaved float32 (dx, dy) in row-major order, little-endian.
FlowField load_flow(const std::filesystem::path& path);
void save_flow(const std::filesystem::path& path, const FlowField& flow);

/// Logits container: 16-byte little-endian header {char[4] "FSLG", uint32 H,
/// uint32 W, uint32 N} followed by H*W*N float32 values, pixel-major with the
/// N channels of a pixel contiguous.
LogitsMap load_logits(const std::filesystem::path& path);
void save_logits(const std::filesystem::path& path, const LogitsMap& logits);

}  // namespace fsd
