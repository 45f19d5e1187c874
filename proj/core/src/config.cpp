#include "fsd/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <variant>

#include "fsd/error.hpp"

namespace fsd {
namespace {

using Slot = std::variant<double*, int*, bool*>;

struct Field {
  const char* key;
  Slot (*bind)(Config&);
};

// One entry per key, in serialization order.
const std::array<Field, 18>& fields() {
  static const std::array<Field, 18> table{{
      {"depth.d_min", [](Config& c) -> Slot { return &c.depth.d_min; }},
      {"depth.d_max", [](Config& c) -> Slot { return &c.depth.d_max; }},
      {"depth.n_bins", [](Config& c) -> Slot { return &c.depth.n_bins; }},
      {"depth.f_base", [](Config& c) -> Slot { return &c.depth.f_base; }},
      {"slic.step", [](Config& c) -> Slot { return &c.slic.step; }},
      {"slic.lambda_lab", [](Config& c) -> Slot { return &c.slic.lambda_lab; }},
      {"slic.lambda_d", [](Config& c) -> Slot { return &c.slic.lambda_d; }},
      {"slic.lambda_pix", [](Config& c) -> Slot { return &c.slic.lambda_pix; }},
      {"slic.iters", [](Config& c) -> Slot { return &c.slic.max_iter; }},
      {"slic.exhaustive", [](Config& c) -> Slot { return &c.slic.exhaustive; }},
      {"fusion.lambda0", [](Config& c) -> Slot { return &c.fusion.lambda0; }},
      {"fusion.lambda1", [](Config& c) -> Slot { return &c.fusion.lambda1; }},
      {"fusion.lambda2", [](Config& c) -> Slot { return &c.fusion.lambda2; }},
      {"mask.threshold_px", [](Config& c) -> Slot { return &c.mask.threshold_px; }},
      {"eval.min_depth", [](Config& c) -> Slot { return &c.eval.min_depth; }},
      {"eval.max_depth", [](Config& c) -> Slot { return &c.eval.max_depth; }},
      {"eval.median_scaling", [](Config& c) -> Slot { return &c.eval.use_median_scaling; }},
      {"eval.eigen_crop", [](Config& c) -> Slot { return &c.eval.eigen_crop; }},
  }};
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_bool(const std::string& text, bool& out) {
  if (text == "true" || text == "1") {
    out = true;
    return true;
  }
  if (text == "false" || text == "0") {
    out = false;
    return true;
  }
  return false;
}

template <typename T>
std::string format_number(T v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

}  // namespace

void Config::validate() const {
  if (!(depth.d_min > 0.0) || !(depth.d_max > depth.d_min) || !std::isfinite(depth.d_max)) {
    throw Error(ErrorCode::kInvalidRange, "depth range requires 0 < d_min < d_max");
  }
  if (depth.n_bins < 1) throw Error(ErrorCode::kInvalidArgument, "depth.n_bins must be >= 1");
  if (!(depth.f_base >= 0.0) || !std::isfinite(depth.f_base)) {
    throw Error(ErrorCode::kInvalidArgument, "depth.f_base must be >= 0");
  }
  slic.validate();
  fusion.validate();
  if (!(mask.threshold_px > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mask.threshold_px must be positive");
  }
  eval.validate();
}

bool operator==(const Config& a, const Config& b) { return serialize_config(a) == serialize_config(b); }

Config parse_config(std::istream& in, const std::string& source) {
  Config config;
  std::set<std::string> seen;
  std::string section;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kParseError, source + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail("unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty() || section.find_first_of(" \t.=") != std::string::npos) {
        fail("bad section name '" + section + "'");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty() || value.empty()) fail("expected 'key = value'");
    if (key.find('.') == std::string::npos) {
      if (section.empty()) fail("key '" + key + "' has no section");
      key = section + "." + key;
    }
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const Field& f) { return key == f.key; });
    if (it == fields().end()) fail("unknown key '" + key + "'");
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");
    const bool ok = std::visit(
        [&](auto* target) {
          using T = std::remove_pointer_t<decltype(target)>;
          if constexpr (std::is_same_v<T, bool>) {
            return parse_bool(value, *target);
          } else {
            return parse_number(value, *target);
          }
        },
        it->bind(config));
    if (!ok) fail("bad value '" + value + "' for " + key);
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_config(in, path.string());
}

std::string serialize_config(const Config& config) {
  Config copy = config;
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = ";
    std::visit(
        [&](auto* v) {
          using T = std::remove_pointer_t<decltype(v)>;
          if constexpr (std::is_same_v<T, bool>) {
            out << (*v ? "true" : "false");
          } else {
            out << format_number(*v);
          }
        },
        f.bind(copy));
    out << '\n';
  }
  return out.str();
}

void save_config(const std::filesystem::path& path, const Config& config) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << serialize_config(config);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace fsd
