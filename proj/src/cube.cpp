#include "punch/cube.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "punch/error.hpp"
#include "punch/hash.hpp"

namespace punch {

HsiCube::HsiCube(int rows, int cols, int channels)
    : HsiCube(rows, cols, channels,
              std::vector<double>(static_cast<std::size_t>(rows) * cols * channels, 0.0)) {}

HsiCube::HsiCube(int rows, int cols, int channels, std::vector<double> data, bool normalized)
    : rows_(rows), cols_(cols), channels_(channels), data_(std::move(data)), normalized_(normalized) {
  if (rows <= 0 || cols <= 0 || channels <= 0) {
    throw DataError("cube dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(rows) * cols * channels) {
    throw DataError("cube data length " + std::to_string(data_.size()) + " does not match " +
                    std::to_string(rows) + "x" + std::to_string(cols) + "x" +
                    std::to_string(channels));
  }
}

std::size_t ClassGrid::count(std::uint16_t cls) const {
  return static_cast<std::size_t>(std::count(ids.begin(), ids.end(), cls));
}

std::uint16_t ClassGrid::max_class() const {
  return ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end());
}

HsiCube normalize(const HsiCube& cube) {
  if (cube.normalized()) throw DataError("cube is already normalized");
  const int nc = cube.channels();
  const std::size_t n = cube.pixel_count();
  std::vector<double> lo(nc, INFINITY), hi(nc, -INFINITY);
  auto src = cube.data();
  for (std::size_t px = 0; px < n; ++px) {
    for (int c = 0; c < nc; ++c) {
      const double v = src[px * nc + c];
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in channel " + std::to_string(c) + " at pixel " +
                        std::to_string(px));
      }
      lo[c] = std::min(lo[c], v);
      hi[c] = std::max(hi[c], v);
    }
  }
  HsiCube out = cube;
  auto dst = out.mutable_data();
  for (std::size_t px = 0; px < n; ++px) {
    for (int c = 0; c < nc; ++c) {
      const double range = hi[c] - lo[c];
      double& v = dst[px * nc + c];
      v = range > 0.0 ? (v - lo[c]) / range : 0.0;
    }
  }
  out.normalized_ = true;
  return out;
}

int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

void extract_patch_into(const HsiCube& cube, PixelCoord center, int p, std::span<double> out) {
  if (p <= 0 || p % 2 == 0) throw ConfigError("patch size must be odd and positive, got " + std::to_string(p));
  if (!cube.contains(center)) {
    throw DataError("patch center (" + std::to_string(center.row) + "," +
                    std::to_string(center.col) + ") outside the scene");
  }
  const int nc = cube.channels();
  const int half = p / 2;
  std::size_t k = 0;
  for (int dr = -half; dr <= half; ++dr) {
    const int r = mirror_index(center.row + dr, cube.rows());
    for (int dc = -half; dc <= half; ++dc) {
      const int c = mirror_index(center.col + dc, cube.cols());
      auto spec = cube.spectrum(PixelCoord{r, c});
      std::copy(spec.begin(), spec.end(), out.begin() + static_cast<std::ptrdiff_t>(k));
      k += nc;
    }
  }
}

Patch extract_patch(const HsiCube& cube, PixelCoord center, int p) {
  Patch patch;
  patch.center = center;
  patch.size = p;
  patch.channels = cube.channels();
  patch.values.resize(static_cast<std::size_t>(p) * p * cube.channels());
  extract_patch_into(cube, center, p, patch.values);
  return patch;
}

std::string to_hex(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

std::string Fnv1a::hex() const { return to_hex(state_); }

}  // namespace punch
