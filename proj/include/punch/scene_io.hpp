#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "punch/cube.hpp"

namespace punch {

struct Scene {
  HsiCube cube;
  std::optional<ClassGrid> ground_truth;
  std::vector<std::string> band_names;
};

/// Reads an "hscn-1" JSON header and its raw payloads. Relative payload
/// paths resolve against the header's directory.
Scene load_scene(const std::filesystem::path& header_path);

/// Writes `<stem>.json`, `<stem>.f32` and, with ground truth, `<stem>.gt.u16`
/// next to `header_path`. Values are stored as little-endian float32.
void save_scene(const std::filesystem::path& header_path, const Scene& scene);

/// Ingests a plain dense-array dump described by a sidecar JSON:
///   {"shape": [rows, cols, channels], "dtype": "f32le|f64le|u16le|i16le",
///    "interleave": "bip|bsq"}
/// bip is (row, col, channel) order; bsq is (channel, row, col).
/// An optional ground-truth dump is raw u16le in (row, col) order.
Scene convert_dense(const std::filesystem::path& raw_path, const std::filesystem::path& sidecar_path,
                    const std::optional<std::filesystem::path>& gt_path = std::nullopt);

/// Content hash over dimensions and values; keys the clustering cache.
std::string scene_hash(const HsiCube& cube);

}  // namespace punch
