#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "punch/classifier.hpp"
#include "punch/clustering.hpp"
#include "punch/cube.hpp"
#include "punch/labels.hpp"
#include "punch/retrieval.hpp"

namespace punch {

enum class EarlyStop { val_loss_rise, val_recall_drop, none };

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double validation_fraction = 0.07;
  EarlyStop early_stop = EarlyStop::val_loss_rise;
  int patience = 10;  // epochs of no improvement (or falling recall) tolerated
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {100, 50};
  Activation activation = Activation::relu;
  Surrogate nnre_surrogate = Surrogate::logistic;  // sigmoid stalls at the all-negative solution under plain SGD
  double gamma = 1.0;

  void validate() const;
};

/// Held-out unlabelled pixels with their hidden ground truth (where the
/// ground truth annotates them).
struct ValidationSet {
  std::vector<PixelCoord> pixels;
  std::vector<std::uint8_t> truth;      // 1 when the pixel is the query class
  std::vector<std::uint8_t> annotated;  // 0 for ground-truth class 0

  bool contains(PixelCoord p) const;
  std::size_t annotated_count() const;
};

/// round(fraction * |I_U|) unlabelled pixels drawn uniformly.
ValidationSet split_validation(const LabelState& labels, const ClassGrid* ground_truth, std::uint16_t positive_class,
                               double fraction, std::uint64_t seed);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_precision;
  std::optional<double> val_recall;
  std::size_t defused_batches = 0;
};

struct TrainResult {
  Classifier classifier;
  std::vector<EpochMetrics> log;
  int best_epoch = 0;
  bool stopped_early = false;
  std::size_t positive_examples = 0;
  std::size_t other_examples = 0;  // unlabelled (nnre) or sampled negatives (pn)
};

struct TrainingContext {
  const HsiCube& cube;  // normalized
  const LabelState& labels;
  const ValidationSet* validation = nullptr;
  int patch_size = 3;
  std::function<void(const EpochMetrics&)> on_epoch;  // optional progress hook
};

/// Flattened patches for the given centres, one row per pixel.
std::vector<double> gather_patches(const HsiCube& cube, std::span<const PixelCoord> pixels, int patch_size);

/// Uniform sample of up to `count` unlabelled pixels outside the validation set.
std::vector<PixelCoord> sample_unlabelled(const TrainingContext& ctx, std::size_t count, std::uint64_t seed);

/// Minibatch gradient descent on the non-negative PU risk.
TrainResult train_nnre_pu(const TrainingContext& ctx, double pi_p, const TrainConfig& config,
                          std::size_t unlabelled_sample_count = 5000);

struct PnPuResult {
  TrainResult train;
  RetrievalScores retrieval;
  std::vector<PixelCoord> negatives;
};

/// Retrieval scores, |I_L+| sampled negatives, then cross-entropy training.
PnPuResult train_pn_pu(const TrainingContext& ctx, const ClusterAssignment& clusters, const RetrievalParams& params,
                       const TrainConfig& config);

/// Training loop shared by both methods, exposed for tests.
TrainResult train_classifier(const TrainingContext& ctx, std::span<const PixelCoord> positives,
                             std::span<const PixelCoord> others, const LossSpec& loss, const TrainConfig& config);

/// Scores for arbitrary pixels.
std::vector<double> score_pixels(const Classifier& net, const HsiCube& cube, int patch_size,
                                 std::span<const PixelCoord> pixels);

struct PredictionMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> scores;          // row-major
  std::vector<std::uint8_t> positive;  // score >= threshold
};

PredictionMap predict_map(const Classifier& net, const HsiCube& cube, int patch_size, double threshold);

const char* to_string(EarlyStop e);
EarlyStop early_stop_from_string(const std::string& s);

}  // namespace punch
