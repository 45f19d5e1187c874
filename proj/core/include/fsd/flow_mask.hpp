#pragma once

#include "fsd/geometry.hpp"
#include "fsd/grid.hpp"

namespace fsd {

/// H x W x 2 displacement (dx, dy) in pixels from the base frame to the
/// source frame.
using FlowField = Grid<double>;

/// 1 = static (loss permitted), 0 = dynamic.
using StaticMask = Mask;

inline constexpr double kDefaultMaskThresholdPx = 10.0;

/// Distance of each flow-displaced pixel p + flow(p) from the epipolar line
/// F [p, 1]. Pixels whose line is degenerate get +inf.
Grid<double> epipolar_deviation(const FlowField& flow, const FundamentalMatrix& f);

/// Static where deviation <= threshold (the boundary value counts as static).
StaticMask build_static_mask(const Grid<double>& deviation,
                             double threshold_px = kDefaultMaskThresholdPx);

}  // namespace fsd
