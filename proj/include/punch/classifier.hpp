#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "punch/cube.hpp"
#include "punch/loss.hpp"

namespace punch {

enum class Activation { relu, tanh };

/// Fully connected network ending in one sigmoid unit. Parameters live in
/// one flat vector: for each layer, W (out x in, row-major) then b (out).
class Classifier {
 public:
  Classifier() = default;
  /// `layers` is {input, hidden..., 1}. Parameters start at zero.
  Classifier(std::vector<std::size_t> layers, Activation activation);

  /// Symmetric uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded.
  static Classifier initialized(std::vector<std::size_t> layers, Activation activation, std::uint64_t seed);

  const std::vector<std::size_t>& layers() const { return layers_; }
  Activation activation() const { return activation_; }
  std::size_t input_size() const { return layers_.front(); }
  std::size_t layer_count() const { return layers_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);

  /// Score in (0, 1) for one flattened input. Throws ConfigError on a
  /// dimension mismatch.
  double forward(std::span<const double> input) const;

  /// Scores for `batch` rows of `inputs` (batch x input_size).
  std::vector<double> forward_batch(std::span<const double> inputs, std::size_t batch) const;

  /// Pre-sigmoid outputs for a batch.
  std::vector<double> logits_batch(std::span<const double> inputs, std::size_t batch) const;

  /// Versioned binary format: "PNCH1", architecture header, f32le parameters.
  void save(const std::filesystem::path& path) const;
  static Classifier load(const std::filesystem::path& path);

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  friend std::vector<double> backprop_with(const Classifier&, std::span<const double>, std::size_t,
                                           const std::function<std::vector<double>(std::span<const double>)>&);

  void build_offsets();

  std::vector<std::size_t> layers_;
  Activation activation_ = Activation::relu;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
};

/// Flattens a patch as the network input: (patch_row, patch_col, channel).
inline std::span<const double> as_input(const Patch& p) { return p.values; }

/// Reference architecture: p*p*channels -> 100 -> 50 -> 1.
std::vector<std::size_t> reference_layers(int patch_size, int channels,
                                          std::vector<std::size_t> hidden = {100, 50});

using DlogitFn = std::function<std::vector<double>(std::span<const double> scores)>;

/// One forward and backward pass. `make_dlogit` maps the batch scores to
/// per-example d objective / d logit; the result is a parameter-shaped
/// gradient. Throws NumericError naming the layer on a non-finite gradient.
std::vector<double> backprop_with(const Classifier& net, std::span<const double> inputs, std::size_t batch,
                                  const DlogitFn& make_dlogit);

/// backprop_with for a fixed dlogit vector.
std::vector<double> backprop(const Classifier& net, std::span<const double> inputs, std::size_t batch,
                             std::span<const double> dlogit);

enum class ExampleTag { positive, unlabelled, sampled_negative };

struct TrainingBatch {
  std::vector<double> inputs;  // batch x input_size
  std::vector<ExampleTag> tags;
  std::vector<double> weights;  // optional per-example weights for unlabelled rows

  std::size_t size() const { return tags.size(); }
  /// 1 for positives, 0 for everything else.
  std::vector<double> labels() const;
};

struct BatchGradient {
  std::vector<double> gradient;
  double loss = 0.0;
  double correction = 0.0;  // nnre_pu only
  bool defused = false;
};

/// Exact gradient of the selected objective on the batch. For pn the
/// tags positive -> 1 and anything else -> 0; nnre_pu rejects
/// sampled_negative rows.
BatchGradient backward(const Classifier& net, const TrainingBatch& batch, const LossSpec& spec);

/// Objective value only (same conventions as backward).
double batch_loss(const Classifier& net, const TrainingBatch& batch, const LossSpec& spec);

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace punch
