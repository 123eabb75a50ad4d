#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "punch/clustering.hpp"
#include "punch/labels.hpp"

namespace punch {

enum class RetrievalModel { spatial, spectral, hybrid };

struct RetrievalParams {
  double baseline = 32.0;     // b, pixels
  double temperature = 24.0;  // T, pixels
  double epsilon = 1e-4;
  RetrievalModel model = RetrievalModel::hybrid;

  void validate() const;
};

/// Pr+(X | X in I_U) for every unlabelled pixel, row-major.
struct RetrievalScores {
  int rows = 0;
  int cols = 0;
  std::vector<PixelCoord> pixels;
  std::vector<double> scores;
  RetrievalModel model = RetrievalModel::hybrid;
  RetrievalParams params;
};

/// Euclidean grid distance to the nearest labelled positive (brute force).
double nearest_positive_distance(PixelCoord x, const LabelState& labels);

/// 1 / (1 + exp((d - b) / T)).
double spatial_factor(double distance, const RetrievalParams& params);

double spatial_score(PixelCoord x, const LabelState& labels, const RetrievalParams& params);

/// min(1, (m + eps) / n) where n is the size of x's cluster and m the
/// number of labelled positives inside it.
double spectral_factor(std::size_t labelled_in_cluster, std::size_t cluster_size, const RetrievalParams& params);

double spectral_score(PixelCoord x, const LabelState& labels, const ClusterAssignment& clusters,
                      const RetrievalParams& params);

double hybrid_score(PixelCoord x, const LabelState& labels, const ClusterAssignment& clusters,
                    const RetrievalParams& params);

/// Scores all of I_U under params.model. `clusters` may be null for the
/// spatial model only.
RetrievalScores score_unlabelled(const LabelState& labels, const ClusterAssignment* clusters,
                                 const RetrievalParams& params);

/// Draws `count` distinct unlabelled pixels, each step choosing X with
/// probability proportional to 1 - Pr+(X) among those not yet drawn.
/// Returned in draw order. Throws NumericError when the remaining mass is 0.
std::vector<PixelCoord> sample_negatives(const RetrievalScores& scores, std::size_t count, std::uint64_t seed);

const char* to_string(RetrievalModel m);
RetrievalModel retrieval_model_from_string(const std::string& s);

}  // namespace punch
