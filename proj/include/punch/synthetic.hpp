#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "punch/scene_io.hpp"

namespace punch {

struct RegionRect {
  std::uint16_t class_id = 1;
  int row = 0;
  int col = 0;
  int height = 1;
  int width = 1;
};

/// Generator parameters for a desk-scale labelled scene. Pixels outside
/// every region take `fill_class`.
struct SyntheticSpec {
  int rows = 64;
  int cols = 64;
  int channels = 8;
  std::vector<std::vector<double>> class_means;  // class_means[k] is the mean of class k + 1
  double noise_sigma = 0.05;
  std::uint16_t fill_class = 1;
  std::vector<RegionRect> regions;

  int class_count() const { return static_cast<int>(class_means.size()); }
};

/// Each pixel's spectrum is its class mean plus iid N(0, sigma^2) noise.
/// Throws ConfigError on overlapping regions or inconsistent means.
Scene make_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed);

/// The 64x64x8 three-class layout used by the end-to-end checks. Class 2 is
/// the query material and occupies two disconnected rectangles.
SyntheticSpec reference_synthetic_spec();

/// Reference layout where class 3 sits `delta` away from the query material
/// instead of 0.5, so the two are hard to separate. Used for prior sweeps,
/// which need a scene whose classifier is not already perfect.
SyntheticSpec confuser_synthetic_spec(double delta = 0.12);

void to_json(nlohmann::json& j, const RegionRect& r);
void from_json(const nlohmann::json& j, RegionRect& r);
void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

}  // namespace punch
