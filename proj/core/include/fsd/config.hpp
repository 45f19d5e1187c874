#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fsd/depth_codec.hpp"
#include "fsd/flow_mask.hpp"
#include "fsd/fusion.hpp"
#include "fsd/metrics.hpp"
#include "fsd/slic3d.hpp"

namespace fsd {

struct DepthConfig {
  double d_min = kDefaultMinDepth;
  double d_max = kDefaultMaxDepth;
  int n_bins = kDefaultBinCount;  // 1 selects the single-channel sigmoid decoder
  double f_base = 0.0;            // 0 disables focal-length bin adaptation
};

struct MaskConfig {
  double threshold_px = kDefaultMaskThresholdPx;
};

struct Config {
  DepthConfig depth;
  SlicParams slic;
  FusionWeights fusion;
  MaskConfig mask;
  EvalConfig eval;

  /// Throws the owning module's error code for the first violated field.
  void validate() const;

  FusionOptions fusion_options() const { return {slic, fusion, depth.d_min, depth.d_max}; }

  friend bool operator==(const Config& a, const Config& b);
};

/// Key-value text. Keys are either dotted ("slic.step = 12") or placed under
/// a "[section]" header. '#' starts a comment. Unknown keys, duplicate keys
/// and malformed values raise kParseError naming the line.
Config parse_config(std::istream& in, const std::string& source = "<stream>");
Config load_config(const std::filesystem::path& path);

/// Every key in section order, values in shortest round-trip form.
std::string serialize_config(const Config& config);
void save_config(const std::filesystem::path& path, const Config& config);

}  // namespace fsd
