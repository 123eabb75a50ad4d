#include "punch/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "punch/error.hpp"
#include "punch/kernels.hpp"
#include "punch/rng.hpp"

namespace punch {

void RetrievalParams::validate() const {
  if (!(baseline >= 0.0)) throw ConfigError("retrieval baseline b must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("retrieval temperature T must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("retrieval epsilon must be > 0");
}

double nearest_positive_distance(PixelCoord x, const LabelState& labels) {
  if (labels.positives().empty()) throw DataError("no labelled positives");
  long best = std::numeric_limits<long>::max();
  for (const auto& p : labels.positives()) {
    const long dr = x.row - p.row, dc = x.col - p.col;
    best = std::min(best, dr * dr + dc * dc);
  }
  return std::sqrt(static_cast<double>(best));
}

double spatial_factor(double distance, const RetrievalParams& params) {
  return 1.0 / (1.0 + std::exp((distance - params.baseline) / params.temperature));
}

double spatial_score(PixelCoord x, const LabelState& labels, const RetrievalParams& params) {
  params.validate();
  return spatial_factor(nearest_positive_distance(x, labels), params);
}

double spectral_factor(std::size_t labelled_in_cluster, std::size_t cluster_size, const RetrievalParams& params) {
  if (cluster_size == 0) throw NumericError("empty cluster in spectral retrieval model");
  return std::min(1.0, (static_cast<double>(labelled_in_cluster) + params.epsilon) /
                           static_cast<double>(cluster_size));
}

namespace {

struct ClusterCounts {
  std::vector<std::size_t> size;
  std::vector<std::size_t> labelled;
};

ClusterCounts count_clusters(const LabelState& labels, const ClusterAssignment& clusters) {
  if (clusters.rows != labels.rows() || clusters.cols != labels.cols()) {
    throw DataError("cluster grid does not match the label grid");
  }
  ClusterCounts cc{clusters.cluster_sizes(), std::vector<std::size_t>(clusters.k, 0)};
  for (const auto& p : labels.positives()) ++cc.labelled[clusters.label(p)];
  return cc;
}

}  // namespace

double spectral_score(PixelCoord x, const LabelState& labels, const ClusterAssignment& clusters,
                      const RetrievalParams& params) {
  params.validate();
  const auto cc = count_clusters(labels, clusters);
  const int c = clusters.label(x);
  return spectral_factor(cc.labelled[c], cc.size[c], params);
}

double hybrid_score(PixelCoord x, const LabelState& labels, const ClusterAssignment& clusters,
                    const RetrievalParams& params) {
  return spectral_score(x, labels, clusters, params) * spatial_score(x, labels, params);
}

RetrievalScores score_unlabelled(const LabelState& labels, const ClusterAssignment* clusters,
                                 const RetrievalParams& params) {
  params.validate();
  if (labels.positives().empty()) throw DataError("no labelled positives");
  const bool spatial = params.model != RetrievalModel::spectral;
  const bool spectral = params.model != RetrievalModel::spatial;
  if (spectral && clusters == nullptr) throw ConfigError("spectral retrieval needs a cluster assignment");

  RetrievalScores out;
  out.rows = labels.rows();
  out.cols = labels.cols();
  out.model = params.model;
  out.params = params;
  out.pixels = labels.unlabelled();

  std::vector<double> dist;
  if (spatial) {
    dist.resize(static_cast<std::size_t>(out.rows) * out.cols);
    kernels::nearest_site_distance(out.rows, out.cols, labels.positives(), dist);
  }
  ClusterCounts cc;
  if (spectral) cc = count_clusters(labels, *clusters);

  out.scores.resize(out.pixels.size());
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const auto p = out.pixels[i];
    double s = 1.0;
    if (spectral) {
      const int c = clusters->label(p);
      s *= spectral_factor(cc.labelled[c], cc.size[c], params);
    }
    if (spatial) s *= spatial_factor(dist[static_cast<std::size_t>(p.row) * out.cols + p.col], params);
    out.scores[i] = s;
  }
  return out;
}

namespace {

// Prefix sums over mutable weights for O(log n) weighted draws.
class FenwickTree {
 public:
  explicit FenwickTree(std::span<const double> w) : tree_(w.size() + 1, 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) add(i, w[i]);
  }
  void add(std::size_t i, double delta) {
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
  }
  /// Smallest index whose inclusive prefix sum exceeds `target`.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    std::size_t step = std::bit_floor(tree_.size() - 1);
    for (; step > 0; step >>= 1) {
      if (pos + step < tree_.size() && tree_[pos + step] <= target) {
        pos += step;
        target -= tree_[pos];
      }
    }
    return pos;
  }

 private:
  std::vector<double> tree_;
};

}  // namespace

std::vector<PixelCoord> sample_negatives(const RetrievalScores& scores, std::size_t count, std::uint64_t seed) {
  const std::size_t n = scores.pixels.size();
  if (count > n) {
    throw ConfigError("cannot draw " + std::to_string(count) + " negatives from " + std::to_string(n) +
                      " unlabelled pixels");
  }
  std::vector<double> mass(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] = std::clamp(1.0 - scores.scores[i], 0.0, 1.0);
    total += mass[i];
  }
  FenwickTree tree(mass);
  Rng rng(seed);
  std::vector<PixelCoord> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (!(total > 0.0)) {
      throw NumericError("negative sampling ran out of mass after " + std::to_string(k) +
                         " draws (every remaining pixel has Pr+ = 1)");
    }
    std::size_t idx = tree.find(uniform01(rng) * total);
    // Guard against rounding landing on an exhausted slot.
    if (idx >= n || mass[idx] <= 0.0) {
      idx = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (mass[j] > 0.0) idx = j;
      }
      if (idx == n) throw NumericError("negative sampling ran out of mass");
    }
    out.push_back(scores.pixels[idx]);
    tree.add(idx, -mass[idx]);
    total -= mass[idx];
    mass[idx] = 0.0;
    if (total < 1e-12) {
      total = 0.0;
      for (double m : mass) total += m;
    }
  }
  return out;
}

const char* to_string(RetrievalModel m) {
  switch (m) {
    case RetrievalModel::spatial: return "spatial";
    case RetrievalModel::spectral: return "spectral";
    case RetrievalModel::hybrid: return "hybrid";
  }
  return "hybrid";
}

RetrievalModel retrieval_model_from_string(const std::string& s) {
  if (s == "spatial") return RetrievalModel::spatial;
  if (s == "spectral") return RetrievalModel::spectral;
  if (s == "hybrid") return RetrievalModel::hybrid;
  throw ConfigError("unknown retrieval model '" + s + "' (expected spatial, spectral or hybrid)");
}

}  // namespace punch
