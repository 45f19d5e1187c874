#include "fsd/io.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <sstream>
#include <utility>

#include "fsd/error.hpp"

namespace fsd {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

std::string describe(const std::filesystem::path& path) { return path.string(); }

cv::Mat read_png(const std::filesystem::path& path, int flags) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kIo, "cannot open " + describe(path));
  cv::Mat m = cv::imread(path.string(), flags);
  if (m.empty()) throw Error(ErrorCode::kBadFormat, "cannot decode " + describe(path));
  return m;
}

void write_png(const std::filesystem::path& path, const cv::Mat& m) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), m);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kIo, "cannot write " + describe(path) + ": " + e.what());
  }
  if (!ok) throw Error(ErrorCode::kIo, "cannot write " + describe(path));
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + describe(path));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + describe(path));
  out << std::setprecision(17);
  return out;
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch) != 0; });
}

// Parses whitespace-separated doubles; false on any malformed token.
bool parse_numbers(const std::string& text, std::vector<double>& out) {
  out.clear();
  const char* p = text.data();
  const char* end = p + text.size();
  while (true) {
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (p == end) return true;
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() ||
        (next < end && !std::isspace(static_cast<unsigned char>(*next)))) {
      return false;
    }
    out.push_back(v);
    p = next;
  }
}

[[noreturn]] void parse_error(const std::string& source, int line, const std::string& why) {
  throw Error(ErrorCode::kParseError, source + ":" + std::to_string(line) + ": " + why);
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

DepthMap load_depth_png(const std::filesystem::path& path) {
  const cv::Mat m = read_png(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  if (m.type() != CV_16UC1) throw Error(ErrorCode::kBadFormat, describe(path) + " is not 16-bit");
  DepthMap out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const auto* row = m.ptr<std::uint16_t>(r);
    for (int c = 0; c < m.cols; ++c) out(r, c) = row[c] / 256.0;
  }
  return out;
}

void save_depth_png(const std::filesystem::path& path, const DepthMap& depth) {
  cv::Mat m(depth.rows(), depth.cols(), CV_16UC1);
  for (int r = 0; r < depth.rows(); ++r) {
    auto* row = m.ptr<std::uint16_t>(r);
    for (int c = 0; c < depth.cols(); ++c) {
      const double d = depth(r, c);
      const double raw = (d > 0.0 && std::isfinite(d)) ? std::round(d * 256.0) : 0.0;
      row[c] = static_cast<std::uint16_t>(std::clamp(raw, 0.0, 65535.0));
    }
  }
  write_png(path, m);
}

Image load_image(const std::filesystem::path& path) {
  const cv::Mat m = read_png(path, cv::IMREAD_COLOR);
  Image out(m.rows, m.cols, 3);
  for (int r = 0; r < m.rows; ++r) {
    const auto* row = m.ptr<cv::Vec3b>(r);
    for (int c = 0; c < m.cols; ++c) {
      for (int ch = 0; ch < 3; ++ch) out(r, c, ch) = row[c][2 - ch] / 255.0;
    }
  }
  return out;
}

void save_image(const std::filesystem::path& path, const Image& rgb) {
  if (rgb.channels() != 3) throw Error(ErrorCode::kChannelMismatch, "expected 3 channels");
  cv::Mat m(rgb.rows(), rgb.cols(), CV_8UC3);
  for (int r = 0; r < rgb.rows(); ++r) {
    auto* row = m.ptr<cv::Vec3b>(r);
    for (int c = 0; c < rgb.cols(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        row[c][2 - ch] =
            static_cast<std::uint8_t>(std::lround(std::clamp(rgb(r, c, ch), 0.0, 1.0) * 255.0));
      }
    }
  }
  write_png(path, m);
}

void save_mask_png(const std::filesystem::path& path, const Mask& mask) {
  cv::Mat m(mask.rows(), mask.cols(), CV_8UC1);
  for (int r = 0; r < mask.rows(); ++r) {
    auto* row = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < mask.cols(); ++c) row[c] = mask(r, c) != 0 ? 255 : 0;
  }
  write_png(path, m);
}

Mask load_mask_png(const std::filesystem::path& path) {
  const cv::Mat m = read_png(path, cv::IMREAD_GRAYSCALE);
  Mask out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const auto* row = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < m.cols; ++c) out(r, c) = row[c] != 0 ? 1 : 0;
  }
  return out;
}

void save_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  cv::Mat m(labels.rows(), labels.cols(), CV_16UC1);
  for (int r = 0; r < labels.rows(); ++r) {
    auto* row = m.ptr<std::uint16_t>(r);
    for (int c = 0; c < labels.cols(); ++c) {
      const std::int32_t id = labels(r, c);
      if (id < 0 || id > 65535) throw Error(ErrorCode::kBadFormat, "label id out of 16-bit range");
      row[c] = static_cast<std::uint16_t>(id);
    }
  }
  write_png(path, m);
}

LabelMap load_label_png(const std::filesystem::path& path) {
  const cv::Mat m = read_png(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  if (m.type() != CV_16UC1) throw Error(ErrorCode::kBadFormat, describe(path) + " is not 16-bit");
  LabelMap out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const auto* row = m.ptr<std::uint16_t>(r);
    for (int c = 0; c < m.cols; ++c) out(r, c) = row[c];
  }
  return out;
}

SparseDepthMap parse_vo_points(std::istream& in, int width, int height, const std::string& source) {
  std::map<std::pair<int, int>, double> chosen;  // (row, col) -> depth
  std::string line;
  std::vector<double> nums;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = strip_comment(line);
    if (blank(body)) continue;
    if (!parse_numbers(body, nums) || nums.size() != 3) {
      parse_error(source, line_no, "expected 'u v depth'");
    }
    if (!std::isfinite(nums[0]) || !std::isfinite(nums[1]) || !(nums[2] > 0.0) ||
        !std::isfinite(nums[2])) {
      parse_error(source, line_no, "coordinates must be finite and depth positive");
    }
    const long u = std::lround(nums[0]);
    const long v = std::lround(nums[1]);
    if (u < 0 || u >= width || v < 0 || v >= height) {
      throw Error(ErrorCode::kOutOfBounds,
                  source + ":" + std::to_string(line_no) + ": pixel outside the image");
    }
    auto [it, inserted] = chosen.emplace(std::make_pair(static_cast<int>(v), static_cast<int>(u)),
                                         nums[2]);
    if (!inserted) it->second = std::min(it->second, nums[2]);
  }
  SparseDepthMap out;
  out.points.reserve(chosen.size());
  for (const auto& [px, d] : chosen) out.points.push_back({px.second, px.first, d});
  return out;
}

SparseDepthMap load_vo_points(const std::filesystem::path& path, int width, int height) {
  auto in = open_in(path);
  return parse_vo_points(in, width, height, describe(path));
}

void save_vo_points(const std::filesystem::path& path, const SparseDepthMap& vo) {
  auto out = open_out(path);
  out << "# u v depth\n";
  for (const auto& p : vo.points) out << p.u << ' ' << p.v << ' ' << p.depth << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + describe(path));
}

std::vector<RelativePose> parse_pose_lines(std::istream& in, const std::string& source) {
  std::vector<RelativePose> poses;
  std::string line;
  std::vector<double> nums;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = strip_comment(line);
    if (blank(body)) continue;
    if (!parse_numbers(body, nums) || nums.size() != 12) {
      parse_error(source, line_no, "expected 12 numbers");
    }
    Eigen::Matrix3d m;
    RelativePose pose;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = nums[static_cast<std::size_t>(r * 4 + c)];
      pose.translation[r] = nums[static_cast<std::size_t>(r * 4 + 3)];
    }
    const std::string where = source + ":" + std::to_string(line_no);
    if (!m.allFinite() || !pose.translation.allFinite()) parse_error(source, line_no, "non-finite");
    if (!project_to_rotation(m, pose.rotation)) {
      throw Error(ErrorCode::kNotARotation, where + ": reflection");
    }
    if ((pose.rotation - m).cwiseAbs().maxCoeff() > 1e-3) {
      throw Error(ErrorCode::kNotARotation, where + ": not orthonormal");
    }
    poses.push_back(pose);
  }
  return poses;
}

std::vector<RelativePose> load_pose_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_pose_lines(in, describe(path));
}

void save_pose_file(const std::filesystem::path& path, std::span<const RelativePose> poses) {
  auto out = open_out(path);
  for (const auto& p : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << p.rotation(r, c) << ' ';
      out << p.translation[r] << (r == 2 ? '\n' : ' ');
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + describe(path));
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::vector<double> nums;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = strip_comment(line);
    if (blank(body)) continue;
    if (!parse_numbers(body, nums) || nums.size() != 6) {
      parse_error(describe(path), line_no, "expected 'fx fy cx cy width height'");
    }
    if (nums[4] != std::floor(nums[4]) || nums[5] != std::floor(nums[5])) {
      parse_error(describe(path), line_no, "image size must be integral");
    }
    CameraIntrinsics k{nums[0], nums[1], nums[2], nums[3], static_cast<int>(nums[4]),
                       static_cast<int>(nums[5])};
    k.validate();
    return k;
  }
  throw Error(ErrorCode::kParseError, describe(path) + ": no intrinsics line");
}

void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k) {
  auto out = open_out(path);
  out << "# fx fy cx cy width height\n"
      << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' ' << k.height
      << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + describe(path));
}

FlowField load_flow(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  float tag = 0.0f;
  std::int32_t w = 0, h = 0;
  if (!read_pod(in, tag) || !read_pod(in, w) || !read_pod(in, h)) {
    throw Error(ErrorCode::kBadFormat, describe(path) + ": truncated header");
  }
  if (tag != 202021.25f) throw Error(ErrorCode::kBadFormat, describe(path) + ": bad magic");
  if (w <= 0 || h <= 0 || w > (1 << 15) || h > (1 << 15)) {
    throw Error(ErrorCode::kBadFormat, describe(path) + ": bad size");
  }
  std::vector<float> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 2);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw Error(ErrorCode::kBadFormat, describe(path) + ": truncated data");
  }
  FlowField out(h, w, 2);
  std::copy(buf.begin(), buf.end(), out.values().begin());
  return out;
}

void save_flow(const std::filesystem::path& path, const FlowField& flow) {
  if (flow.channels() != 2) throw Error(ErrorCode::kChannelMismatch, "flow needs 2 channels");
  auto out = open_out(path, std::ios::binary);
  write_pod(out, 202021.25f);
  write_pod(out, static_cast<std::int32_t>(flow.cols()));
  write_pod(out, static_cast<std::int32_t>(flow.rows()));
  for (double v : flow.values()) write_pod(out, static_cast<float>(v));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + describe(path));
}

LogitsMap load_logits(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[4] = {};
  std::uint32_t h = 0, w = 0, n = 0;
  if (!in.read(magic, 4) || !read_pod(in, h) || !read_pod(in, w) || !read_pod(in, n)) {
    throw Error(ErrorCode::kBadFormat, describe(path) + ": truncated header");
  }
  if (std::memcmp(magic, "FSLG", 4) != 0) {
    throw Error(ErrorCode::kBadFormat, describe(path) + ": bad magic");
  }
  if (h == 0 || w == 0 || n == 0 || h > (1u << 15) || w > (1u << 15) || n > 4096) {
    throw Error(ErrorCode::kBadFormat, describe(path) + ": bad size");
  }
  std::vector<float> buf(static_cast<std::size_t>(h) * w * n);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw Error(ErrorCode::kBadFormat, describe(path) + ": truncated data");
  }
  LogitsMap out(static_cast<int>(h), static_cast<int>(w), static_cast<int>(n));
  std::copy(buf.begin(), buf.end(), out.values().begin());
  return out;
}

void save_logits(const std::filesystem::path& path, const LogitsMap& logits) {
  auto out = open_out(path, std::ios::binary);
  out.write("FSLG", 4);
  write_pod(out, static_cast<std::uint32_t>(logits.rows()));
  write_pod(out, static_cast<std::uint32_t>(logits.cols()));
  write_pod(out, static_cast<std::uint32_t>(logits.channels()));
  for (double v : logits.values()) write_pod(out, static_cast<float>(v));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + describe(path));
}

}  // namespace fsd
