#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "punch/cube.hpp"

namespace punch {

struct ClusterAssignment {
  int k = 0;
  int rows = 0;
  int cols = 0;
  std::vector<int> labels;      // row-major cluster id per pixel
  std::vector<double> centroids;  // k x channels
  int channels = 0;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;  // after each assignment step

  int label(PixelCoord p) const { return labels[static_cast<std::size_t>(p.row) * cols + p.col]; }
  std::vector<std::size_t> cluster_sizes() const;
};

struct KMeansOptions {
  int max_iters = 100;
  double tol = 1e-6;
  int restarts = 10;  // k-means++ starts; the lowest inertia wins
};

/// Lloyd's algorithm from seeded k-means++ starts. Clusters that empty
/// out are re-seeded at the pixel farthest from its centroid.
ClusterAssignment kmeans(const HsiCube& cube, int k, std::uint64_t seed, KMeansOptions options = {});

/// Same iteration from caller-supplied initial centroids (k x channels).
ClusterAssignment kmeans_from_centroids(const HsiCube& cube, std::vector<double> centroids,
                                        KMeansOptions options = {});

/// Seeded k-means++ initial centroids.
std::vector<double> kmeans_plus_plus(const HsiCube& cube, int k, std::uint64_t seed);

/// Disk cache keyed by (scene hash, k, seed): a previous run's clustering
/// of the same scene is reused.
class ClusterCache {
 public:
  explicit ClusterCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const std::string& scene_hash, int k, std::uint64_t seed) const;
  std::optional<ClusterAssignment> load(const std::string& scene_hash, int k, std::uint64_t seed) const;
  void store(const std::string& scene_hash, std::uint64_t seed, const ClusterAssignment& a) const;

  /// Returns the cached assignment or computes and stores it.
  ClusterAssignment get_or_compute(const HsiCube& cube, int k, std::uint64_t seed,
                                   KMeansOptions options = {}, bool* was_cached = nullptr) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace punch
