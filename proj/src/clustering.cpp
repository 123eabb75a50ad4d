#include "punch/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <string>

#include "punch/error.hpp"
#include "punch/kernels.hpp"
#include "punch/rng.hpp"
#include "punch/scene_io.hpp"

namespace punch {

using nlohmann::json;

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels) ++sizes[l];
  return sizes;
}

std::vector<double> kmeans_plus_plus(const HsiCube& cube, int k, std::uint64_t seed) {
  const std::size_t n = cube.pixel_count();
  const std::size_t dim = cube.channels();
  if (k < 1) throw ConfigError("cluster count must be positive");
  if (static_cast<std::size_t>(k) > n) {
    throw ConfigError("cluster count " + std::to_string(k) + " exceeds pixel count " + std::to_string(n));
  }
  auto points = cube.data();
  Rng rng(seed);
  std::vector<double> centroids;
  centroids.reserve(k * dim);
  const std::size_t first = uniform_index(rng, n);
  centroids.insert(centroids.end(), points.begin() + first * dim, points.begin() + (first + 1) * dim);

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<int> scratch(n);
  std::vector<double> nearest(n);
  for (int c = 1; c < k; ++c) {
    // Distances to the newest centroid only; keep the running minimum.
    std::span<const double> newest(centroids.data() + (c - 1) * dim, dim);
    kernels::assign_nearest(points, dim, newest, scratch, nearest);
    double total = 0.0;
    std::size_t farthest = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], nearest[i]);
      total += d2[i];
      if (d2[i] > d2[farthest]) farthest = i;
    }
    std::size_t chosen = farthest;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centroids.insert(centroids.end(), points.begin() + chosen * dim, points.begin() + (chosen + 1) * dim);
  }
  return centroids;
}

ClusterAssignment kmeans_from_centroids(const HsiCube& cube, std::vector<double> centroids,
                                        KMeansOptions options) {
  const std::size_t n = cube.pixel_count();
  const std::size_t dim = cube.channels();
  if (centroids.empty() || centroids.size() % dim != 0) {
    throw ConfigError("initial centroids must be a non-empty k x channels array");
  }
  const int k = static_cast<int>(centroids.size() / dim);
  if (static_cast<std::size_t>(k) > n) {
    throw ConfigError("cluster count " + std::to_string(k) + " exceeds pixel count " + std::to_string(n));
  }
  auto points = cube.data();

  ClusterAssignment out;
  out.k = k;
  out.rows = cube.rows();
  out.cols = cube.cols();
  out.channels = cube.channels();
  out.labels.assign(n, 0);
  std::vector<double> d2(n);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);

  // Round-off slack for the monotonicity check, scaled to the data.
  double energy = 0.0;
  for (double v : points) energy += v * v;
  const double slack = 1e-12 * energy;

  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < std::max(1, options.max_iters); ++iter) {
    kernels::assign_nearest(points, dim, centroids, out.labels, d2);

    // Re-seed empty clusters at the currently worst-fit pixel.
    std::fill(counts.begin(), counts.end(), 0);
    for (int l : out.labels) ++counts[l];
    for (int c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double worst = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[out.labels[i]] > 1 && d2[i] > worst) {
          worst = d2[i];
          far = i;
        }
      }
      --counts[out.labels[far]];
      out.labels[far] = c;
      counts[c] = 1;
      d2[far] = 0.0;
      std::copy(points.begin() + far * dim, points.begin() + (far + 1) * dim, centroids.begin() + c * dim);
    }

    double inertia = 0.0;
    for (double v : d2) inertia += v;
    if (inertia > previous + slack) {
      throw NumericError("k-means inertia increased from " + std::to_string(previous) + " to " +
                         std::to_string(inertia) + " at iteration " + std::to_string(iter));
    }
    previous = inertia;
    out.inertia_history.push_back(inertia);
    out.inertia = inertia;
    out.iterations = iter + 1;

    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* s = sums.data() + out.labels[i] * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += points[i * dim + j];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      double moved = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double updated = sums[c * dim + j] / static_cast<double>(counts[c]);
        const double t = updated - centroids[c * dim + j];
        moved += t * t;
        centroids[c * dim + j] = updated;
      }
      shift = std::max(shift, std::sqrt(moved));
    }
    if (shift < options.tol) break;
  }
  // Final assignment against the converged centroids so labels and
  // centroids are mutually consistent.
  kernels::assign_nearest(points, dim, centroids, out.labels, d2);
  double inertia = 0.0;
  for (double v : d2) inertia += v;
  if (inertia > previous + slack) {
    throw NumericError("k-means inertia increased in the final assignment");
  }
  out.inertia = inertia;
  out.centroids = std::move(centroids);
  return out;
}

ClusterAssignment kmeans(const HsiCube& cube, int k, std::uint64_t seed, KMeansOptions options) {
  if (k < 2) throw ConfigError("k-means needs at least 2 clusters, got " + std::to_string(k));
  ClusterAssignment best;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    const std::uint64_t s = r == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(r));
    auto a = kmeans_from_centroids(cube, kmeans_plus_plus(cube, k, s), options);
    if (r == 0 || a.inertia < best.inertia) best = std::move(a);
  }
  return best;
}

std::filesystem::path ClusterCache::path_for(const std::string& scene_hash, int k, std::uint64_t seed) const {
  return dir_ / ("kmeans-" + scene_hash + "-k" + std::to_string(k) + "-s" + std::to_string(seed) + ".json");
}

std::optional<ClusterAssignment> ClusterCache::load(const std::string& scene_hash, int k,
                                                    std::uint64_t seed) const {
  const auto path = path_for(scene_hash, k, seed);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (j.value("scene_hash", std::string{}) != scene_hash || j.value("k", 0) != k) return std::nullopt;
  ClusterAssignment a;
  a.k = k;
  a.rows = j.at("rows").get<int>();
  a.cols = j.at("cols").get<int>();
  a.channels = j.at("channels").get<int>();
  a.labels = j.at("labels").get<std::vector<int>>();
  a.centroids = j.at("centroids").get<std::vector<double>>();
  a.inertia = j.at("inertia").get<double>();
  a.iterations = j.at("iterations").get<int>();
  a.inertia_history = j.at("inertia_history").get<std::vector<double>>();
  return a;
}

void ClusterCache::store(const std::string& scene_hash, std::uint64_t seed, const ClusterAssignment& a) const {
  std::filesystem::create_directories(dir_);
  json j = {{"scene_hash", scene_hash}, {"k", a.k},           {"seed", seed},
            {"rows", a.rows},           {"cols", a.cols},     {"channels", a.channels},
            {"labels", a.labels},       {"centroids", a.centroids}, {"inertia", a.inertia},
            {"iterations", a.iterations}, {"inertia_history", a.inertia_history}};
  const auto path = path_for(scene_hash, a.k, seed);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write cluster cache " + tmp);
    out << j.dump();
  }
  std::filesystem::rename(tmp, path);
}

ClusterAssignment ClusterCache::get_or_compute(const HsiCube& cube, int k, std::uint64_t seed,
                                               KMeansOptions options, bool* was_cached) const {
  const auto hash = scene_hash(cube);
  if (auto hit = load(hash, k, seed)) {
    if (was_cached) *was_cached = true;
    return *hit;
  }
  if (was_cached) *was_cached = false;
  auto a = kmeans(cube, k, seed, options);
  store(hash, seed, a);
  return a;
}

}  // namespace punch
