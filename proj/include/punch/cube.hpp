#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace punch {

struct PixelCoord {
  int row = 0;
  int col = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

/// Hyperspectral scene stored row-major as (row, col, channel).
class HsiCube {
 public:
  HsiCube() = default;
  HsiCube(int rows, int cols, int channels);
  HsiCube(int rows, int cols, int channels, std::vector<double> data, bool normalized = false);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(rows_) * cols_; }
  bool normalized() const { return normalized_; }

  bool contains(PixelCoord p) const {
    return p.row >= 0 && p.row < rows_ && p.col >= 0 && p.col < cols_;
  }
  std::size_t pixel_index(PixelCoord p) const {
    return static_cast<std::size_t>(p.row) * cols_ + p.col;
  }
  PixelCoord coord_of(std::size_t index) const {
    return {static_cast<int>(index / cols_), static_cast<int>(index % cols_)};
  }

  double at(int row, int col, int channel) const {
    return data_[(static_cast<std::size_t>(row) * cols_ + col) * channels_ + channel];
  }
  double& at(int row, int col, int channel) {
    return data_[(static_cast<std::size_t>(row) * cols_ + col) * channels_ + channel];
  }

  std::span<const double> spectrum(std::size_t pixel) const {
    return {data_.data() + pixel * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const double> spectrum(PixelCoord p) const { return spectrum(pixel_index(p)); }

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }

 private:
  friend HsiCube normalize(const HsiCube& cube);

  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
  bool normalized_ = false;
};

/// Row-major (row, col) grid of ground-truth class ids. Class 0 means
/// unannotated and is ignored by annotation and evaluation.
struct ClassGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint16_t> ids;

  std::uint16_t at(PixelCoord p) const { return ids[static_cast<std::size_t>(p.row) * cols + p.col]; }
  std::size_t count(std::uint16_t cls) const;
  std::uint16_t max_class() const;
};

struct Patch {
  PixelCoord center;
  int size = 1;
  int channels = 0;
  std::vector<double> values;  // (patch_row, patch_col, channel), row-major

  double at(int r, int c, int ch) const {
    return values[(static_cast<std::size_t>(r) * size + c) * channels + ch];
  }
};

/// Per-channel min-max scaling to [0, 1]. Constant channels become zero.
/// Throws DataError on non-finite input or if the cube is already normalized.
HsiCube normalize(const HsiCube& cube);

/// Mirror index for reflect-101 padding: -1 -> 1, n -> n - 2.
int mirror_index(int i, int n);

/// p x p window centred on `center`, out-of-range positions mirrored.
Patch extract_patch(const HsiCube& cube, PixelCoord center, int p);

/// Writes the flattened patch directly into `out` (size p*p*channels).
void extract_patch_into(const HsiCube& cube, PixelCoord center, int p, std::span<double> out);

}  // namespace punch
