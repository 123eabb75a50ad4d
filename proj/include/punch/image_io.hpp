#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "punch/cube.hpp"
#include "punch/metrics.hpp"

namespace punch {

/// Binary PGM (P5) with maxval 65535; values in [0, 1] are scaled and rounded.
/// `comment`, when non-empty, goes into a header comment line.
std::vector<std::uint8_t> encode_pgm16(int rows, int cols, std::span<const double> values,
                                       const std::string& comment = {});
void write_pgm16(const std::filesystem::path& path, int rows, int cols, std::span<const double> values,
                 const std::string& comment = {});

struct GrayImage16 {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint16_t> pixels;
};
GrayImage16 read_pgm16(const std::filesystem::path& path);

enum class PngKind { gray8, rgb8, indexed8 };

struct Image {
  int rows = 0;
  int cols = 0;
  PngKind kind = PngKind::rgb8;
  std::vector<std::uint8_t> pixels;  // 1 byte per pixel for gray/indexed, 3 for rgb
  std::vector<Rgb> palette;          // indexed only
  std::vector<std::pair<std::string, std::string>> text;  // tEXt chunks
};

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

/// Decodes any 8-bit PNG to RGB (palette and gray expanded), keeping tEXt
/// chunks that precede the image data.
Image decode_png_rgb(std::span<const std::uint8_t> bytes);

/// Scores in [0, 1] quantized to 8-bit gray.
Image score_image(int rows, int cols, std::span<const double> scores);

/// Indexed image with palette entry i = outcome_colour(Outcome(i)).
Image confusion_image(int rows, int cols, std::span<const Outcome> outcomes);

/// False-colour composite of three channels, each min-max scaled to [0, 255].
Image false_colour(const HsiCube& cube, int r, int g, int b);

/// Dimmed grayscale backdrop (band mean) with labelled positives in green
/// and negatives or unlabelled training pixels in red.
Image training_data_image(const HsiCube& cube, std::span<const PixelCoord> positives,
                          std::span<const PixelCoord> negatives);

}  // namespace punch
