#include "punch/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "punch/error.hpp"
#include "punch/rng.hpp"

namespace punch {

using nlohmann::json;

Scene make_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.rows <= 0 || spec.cols <= 0 || spec.channels <= 0) {
    throw ConfigError("synthetic scene dimensions must be positive");
  }
  if (spec.class_means.empty()) throw ConfigError("synthetic scene needs at least one class mean");
  for (const auto& m : spec.class_means) {
    if (static_cast<int>(m.size()) != spec.channels) {
      throw ConfigError("class mean length does not match channel count");
    }
  }
  if (spec.noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
  auto check_class = [&](std::uint16_t id) {
    if (id == 0 || id > spec.class_means.size()) {
      throw ConfigError("class id " + std::to_string(id) + " has no declared mean");
    }
  };
  check_class(spec.fill_class);

  const std::size_t n = static_cast<std::size_t>(spec.rows) * spec.cols;
  ClassGrid gt{spec.rows, spec.cols, std::vector<std::uint16_t>(n, spec.fill_class)};
  std::vector<bool> claimed(n, false);
  for (std::size_t k = 0; k < spec.regions.size(); ++k) {
    const auto& r = spec.regions[k];
    check_class(r.class_id);
    if (r.height <= 0 || r.width <= 0 || r.row < 0 || r.col < 0 || r.row + r.height > spec.rows ||
        r.col + r.width > spec.cols) {
      throw ConfigError("region " + std::to_string(k) + " lies outside the scene");
    }
    for (int i = r.row; i < r.row + r.height; ++i) {
      for (int j = r.col; j < r.col + r.width; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * spec.cols + j;
        if (claimed[idx]) {
          throw ConfigError("region " + std::to_string(k) + " overlaps an earlier region at (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
        }
        claimed[idx] = true;
        gt.ids[idx] = r.class_id;
      }
    }
  }

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> data(n * spec.channels);
  for (std::size_t px = 0; px < n; ++px) {
    const auto& mean = spec.class_means[gt.ids[px] - 1];
    for (int c = 0; c < spec.channels; ++c) {
      const double eps = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
      data[px * spec.channels + c] = mean[c] + eps;
    }
  }
  return Scene{HsiCube(spec.rows, spec.cols, spec.channels, std::move(data)), std::move(gt), {}};
}

SyntheticSpec reference_synthetic_spec() {
  SyntheticSpec s;
  s.rows = 64;
  s.cols = 64;
  s.channels = 8;
  s.noise_sigma = 0.05;
  // Shared smooth base spectrum plus a class-specific bump; any two means
  // are 0.5 apart in Euclidean distance.
  const std::vector<double> base = {0.30, 0.35, 0.40, 0.45, 0.45, 0.40, 0.35, 0.30};
  const double bump = 0.5 / std::sqrt(2.0);
  for (int k = 0; k < 3; ++k) {
    auto m = base;
    m[2 * k + 1] += bump;
    s.class_means.push_back(m);
  }
  s.fill_class = 1;
  s.regions = {
      {2, 6, 6, 14, 14},    // query material, patch A
      {2, 40, 38, 14, 18},  // query material, patch B
      {3, 6, 34, 20, 24},
      {3, 42, 4, 16, 16},
  };
  return s;
}

SyntheticSpec confuser_synthetic_spec(double delta) {
  if (!(delta > 0.0)) throw ConfigError("confuser distance must be positive");
  auto s = reference_synthetic_spec();
  const double step = delta / std::sqrt(2.0);
  s.class_means[2] = s.class_means[1];
  s.class_means[2][5] += step;
  s.class_means[2][6] += step;
  return s;
}

void to_json(json& j, const RegionRect& r) {
  j = {{"class", r.class_id}, {"row", r.row}, {"col", r.col}, {"height", r.height}, {"width", r.width}};
}

void from_json(const json& j, RegionRect& r) {
  r.class_id = j.at("class").get<std::uint16_t>();
  r.row = j.at("row").get<int>();
  r.col = j.at("col").get<int>();
  r.height = j.at("height").get<int>();
  r.width = j.at("width").get<int>();
}

void to_json(json& j, const SyntheticSpec& s) {
  j = {{"rows", s.rows},
       {"cols", s.cols},
       {"channels", s.channels},
       {"class_means", s.class_means},
       {"noise_sigma", s.noise_sigma},
       {"fill_class", s.fill_class},
       {"regions", s.regions}};
}

void from_json(const json& j, SyntheticSpec& s) {
  SyntheticSpec d;
  s.rows = j.value("rows", d.rows);
  s.cols = j.value("cols", d.cols);
  s.channels = j.value("channels", d.channels);
  s.class_means = j.at("class_means").get<std::vector<std::vector<double>>>();
  s.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  s.fill_class = j.value("fill_class", d.fill_class);
  s.regions = j.value("regions", std::vector<RegionRect>{});
}

}  // namespace punch
