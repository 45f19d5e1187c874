#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fsd {

/// Row-major H x W x C raster. Channels are interleaved per pixel.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int rows, int cols, int channels = 1, T fill = T{})
      : rows_(rows), cols_(cols), channels_(channels),
        data_(static_cast<std::size_t>(rows) * cols * channels, fill) {
    assert(rows >= 0 && cols >= 0 && channels >= 1);
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(rows_) * cols_;
  }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int r, int c, int ch = 0) noexcept { return data_[index(r, c, ch)]; }
  const T& operator()(int r, int c, int ch = 0) const noexcept {
    return data_[index(r, c, ch)];
  }

  std::span<T> pixel(int r, int c) noexcept {
    return {data_.data() + index(r, c, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<const T> pixel(int r, int c) const noexcept {
    return {data_.data() + index(r, c, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<T> row(int r) noexcept {
    return {data_.data() + index(r, 0, 0), static_cast<std::size_t>(cols_) * channels_};
  }
  std::span<const T> row(int r) const noexcept {
    return {data_.data() + index(r, 0, 0), static_cast<std::size_t>(cols_) * channels_};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool contains(int r, int c) const noexcept {
    return r >= 0 && r < rows_ && c >= 0 && c < cols_;
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  std::size_t index(int r, int c, int ch) const noexcept {
    assert(contains(r, c) && ch >= 0 && ch < channels_);
    return (static_cast<std::size_t>(r) * cols_ + c) * channels_ + ch;
  }

  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

/// Metric depth in meters; 0 marks an invalid pixel.
using DepthMap = Grid<double>;
/// Color or gray image with values in [0, 1].
using Image = Grid<double>;
/// Boolean raster stored as 0/1 bytes.
using Mask = Grid<std::uint8_t>;
using LabelMap = Grid<std::int32_t>;

/// Mirror a raster about its vertical center line.
template <typename T>
Grid<T> flip_horizontal(const Grid<T>& in) {
  Grid<T> out(in.rows(), in.cols(), in.channels());
  for (int r = 0; r < in.rows(); ++r) {
    for (int c = 0; c < in.cols(); ++c) {
      auto src = in.pixel(r, in.cols() - 1 - c);
      auto dst = out.pixel(r, c);
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k];
    }
  }
  return out;
}

}  // namespace fsd
