#include "fsd/flow_mask.hpp"

#include <cmath>
#include <limits>

#include "fsd/error.hpp"
#include "fsd/parallel.hpp"

namespace fsd {

Grid<double> epipolar_deviation(const FlowField& flow, const FundamentalMatrix& f) {
  if (flow.channels() != 2) {
    throw Error(ErrorCode::kChannelMismatch, "flow field must have two channels");
  }
  Grid<double> out(flow.rows(), flow.cols());
  parallel_for(0, flow.rows(), [&](int r) {
    for (int c = 0; c < flow.cols(); ++c) {
      const EpipolarLine line = epipolar_line(f, Eigen::Vector2d(c, r));
      const Eigen::Vector2d target(c + flow(r, c, 0), r + flow(r, c, 1));
      const auto& l = line.coeffs;
      if (l[0] * l[0] + l[1] * l[1] < 1e-20) {
        out(r, c) = std::numeric_limits<double>::infinity();
      } else {
        out(r, c) = point_line_distance(line, target);
      }
    }
  });
  return out;
}

StaticMask build_static_mask(const Grid<double>& deviation, double threshold_px) {
  if (!(threshold_px > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mask threshold must be positive");
  }
  StaticMask mask(deviation.rows(), deviation.cols());
  auto d = deviation.values();
  auto m = mask.values();
  for (std::size_t i = 0; i < d.size(); ++i) m[i] = d[i] <= threshold_px ? 1 : 0;
  return mask;
}

}  // namespace fsd
