#include "punch/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "punch/error.hpp"
#include "punch/rng.hpp"

namespace punch {

namespace {

enum SeedTag : std::uint64_t { kInit = 1, kShuffle = 2, kUnlabelled = 3, kNegatives = 4 };

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// All validation pixels feed the nnre risk; the annotated ones also carry
// truth for BCE, precision and recall.
struct Validation {
  std::vector<double> inputs;
  std::vector<std::uint8_t> annotated;
  std::vector<std::uint8_t> truth;
  std::size_t count = 0;
  std::size_t annotated_count = 0;
};

Validation prepare_validation(const TrainingContext& ctx) {
  Validation v;
  if (!ctx.validation) return v;
  v.count = ctx.validation->pixels.size();
  v.annotated = ctx.validation->annotated;
  v.truth = ctx.validation->truth;
  v.annotated_count = ctx.validation->annotated_count();
  v.inputs = gather_patches(ctx.cube, ctx.validation->pixels, ctx.patch_size);
  return v;
}

// nnre_pu monitors its own objective with the validation pixels as the
// unlabelled sample, so it needs no ground truth and stays prior-aware.
// pn monitors cross entropy against the held-out truth.
void evaluate(const Classifier& net, const Validation& v, const LossSpec& loss, std::span<const double> pos_inputs,
              std::size_t positives, EpochMetrics& m) {
  if (v.count == 0) return;
  const auto s = net.forward_batch(v.inputs, v.count);
  std::vector<double> sa, ya;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < v.count; ++i) {
    if (!v.annotated[i]) continue;
    sa.push_back(s[i]);
    ya.push_back(v.truth[i]);
    const bool pred = s[i] >= 0.5;
    if (pred && v.truth[i]) ++tp;
    if (pred && !v.truth[i]) ++fp;
    if (!pred && v.truth[i]) ++fn;
  }
  if (loss.kind == LossKind::nnre_pu) {
    const auto sp = net.forward_batch(pos_inputs, positives);
    m.val_loss = nnre_pu_loss(sp, s, loss).total;
  } else if (!sa.empty()) {
    m.val_loss = pn_loss(sa, ya);
  }
  if (tp + fp > 0) m.val_precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.val_recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
}

void append_row(TrainingBatch& b, const std::vector<double>& inputs, std::size_t row, std::size_t dim,
                ExampleTag tag) {
  b.inputs.insert(b.inputs.end(), inputs.begin() + static_cast<std::ptrdiff_t>(row * dim),
                  inputs.begin() + static_cast<std::ptrdiff_t>((row + 1) * dim));
  b.tags.push_back(tag);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || epochs > 100) throw ConfigError("epochs must lie in [1, 100]");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
}

bool ValidationSet::contains(PixelCoord p) const { return std::binary_search(pixels.begin(), pixels.end(), p); }

std::size_t ValidationSet::annotated_count() const {
  return static_cast<std::size_t>(std::count(annotated.begin(), annotated.end(), std::uint8_t{1}));
}

ValidationSet split_validation(const LabelState& labels, const ClassGrid* ground_truth, std::uint16_t positive_class,
                               double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation_fraction must lie in (0, 1)");
  if (ground_truth && (ground_truth->rows != labels.rows() || ground_truth->cols != labels.cols())) {
    throw DataError("ground truth and labels differ in shape");
  }
  auto pool = labels.unlabelled();
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool.size()) + 0.5));
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  pool.resize(n);
  std::sort(pool.begin(), pool.end());

  ValidationSet v;
  v.pixels = std::move(pool);
  v.truth.assign(v.pixels.size(), 0);
  v.annotated.assign(v.pixels.size(), 0);
  if (ground_truth) {
    for (std::size_t i = 0; i < v.pixels.size(); ++i) {
      const auto c = ground_truth->at(v.pixels[i]);
      v.annotated[i] = c != 0;
      v.truth[i] = c == positive_class;
    }
  }
  return v;
}

std::vector<double> gather_patches(const HsiCube& cube, std::span<const PixelCoord> pixels, int patch_size) {
  const std::size_t dim = static_cast<std::size_t>(patch_size) * patch_size * cube.channels();
  std::vector<double> out(pixels.size() * dim);
  const auto n = static_cast<std::ptrdiff_t>(pixels.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    extract_patch_into(cube, pixels[i], patch_size, std::span<double>(out.data() + i * dim, dim));
  }
  return out;
}

std::vector<PixelCoord> sample_unlabelled(const TrainingContext& ctx, std::size_t count, std::uint64_t seed) {
  std::vector<PixelCoord> pool;
  for (const auto& p : ctx.labels.unlabelled()) {
    if (!ctx.validation || !ctx.validation->contains(p)) pool.push_back(p);
  }
  if (pool.empty()) throw DataError("no unlabelled pixels left for training");
  const std::size_t n = std::min(count, pool.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  pool.resize(n);
  return pool;
}

TrainResult train_classifier(const TrainingContext& ctx, std::span<const PixelCoord> positives,
                             std::span<const PixelCoord> others, const LossSpec& loss, const TrainConfig& config) {
  config.validate();
  loss.validate();
  if (!ctx.cube.normalized()) throw DataError("training needs a normalized cube");
  if (positives.empty()) throw DataError("training needs at least one labelled positive");
  if (others.empty()) throw DataError("training needs unlabelled or negative examples");

  const auto layers = reference_layers(ctx.patch_size, ctx.cube.channels(), config.hidden);
  const std::size_t dim = layers.front();
  TrainResult result;
  result.classifier = Classifier::initialized(layers, config.activation, derive_seed(config.seed, kInit));
  result.positive_examples = positives.size();
  result.other_examples = others.size();

  const auto pos_in = gather_patches(ctx.cube, positives, ctx.patch_size);
  const auto oth_in = gather_patches(ctx.cube, others, ctx.patch_size);
  const auto validation = prepare_validation(ctx);
  const bool nnre = loss.kind == LossKind::nnre_pu;
  const ExampleTag other_tag = nnre ? ExampleTag::unlabelled : ExampleTag::sampled_negative;

  Rng rng(derive_seed(config.seed, kShuffle));
  auto pos_order = iota_vec(positives.size());
  auto oth_order = iota_vec(others.size());
  auto all_order = iota_vec(positives.size() + others.size());

  Classifier& net = result.classifier;
  Classifier best = net;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0, dropping = 0;
  std::optional<double> last_recall;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<TrainingBatch> batches;
    if (nnre) {
      // Unlabelled rows are split into batches and every batch gets a
      // proportional, cyclic slice of the positives.
      shuffle(pos_order, rng);
      shuffle(oth_order, rng);
      const std::size_t nb = (others.size() + config.batch_size - 1) / config.batch_size;
      const std::size_t per = std::max<std::size_t>(1, (positives.size() + nb - 1) / nb);
      std::size_t cursor = 0;
      for (std::size_t b = 0; b < nb; ++b) {
        TrainingBatch batch;
        for (std::size_t k = 0; k < per; ++k, ++cursor) {
          append_row(batch, pos_in, pos_order[cursor % positives.size()], dim, ExampleTag::positive);
        }
        const std::size_t end = std::min(others.size(), (b + 1) * config.batch_size);
        for (std::size_t j = b * config.batch_size; j < end; ++j) append_row(batch, oth_in, oth_order[j], dim, other_tag);
        batches.push_back(std::move(batch));
      }
    } else {
      shuffle(all_order, rng);
      for (std::size_t start = 0; start < all_order.size(); start += config.batch_size) {
        TrainingBatch batch;
        const std::size_t end = std::min(all_order.size(), start + config.batch_size);
        for (std::size_t j = start; j < end; ++j) {
          const std::size_t i = all_order[j];
          if (i < positives.size()) {
            append_row(batch, pos_in, i, dim, ExampleTag::positive);
          } else {
            append_row(batch, oth_in, i - positives.size(), dim, other_tag);
          }
        }
        batches.push_back(std::move(batch));
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    for (const auto& batch : batches) {
      const auto g = backward(net, batch, loss);
      auto params = net.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * g.gradient[i];
      m.train_loss += g.loss;
      m.defused_batches += g.defused ? 1 : 0;
    }
    m.train_loss /= static_cast<double>(batches.size());
    evaluate(net, validation, loss, pos_in, positives.size(), m);
    result.log.push_back(m);
    if (ctx.on_epoch) ctx.on_epoch(m);

    if (!m.val_loss) continue;
    if (*m.val_loss < best_loss) {
      best_loss = *m.val_loss;
      best = net;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (m.val_recall && last_recall && *m.val_recall < *last_recall) {
      ++dropping;
    } else {
      dropping = 0;
    }
    if (m.val_recall) last_recall = m.val_recall;

    const bool stop = (config.early_stop == EarlyStop::val_loss_rise && stale >= config.patience) ||
                      (config.early_stop == EarlyStop::val_recall_drop && dropping >= config.patience);
    if (stop) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }

  if (result.best_epoch > 0) {
    net = std::move(best);
  } else {
    result.best_epoch = static_cast<int>(result.log.size());
  }
  return result;
}

TrainResult train_nnre_pu(const TrainingContext& ctx, double pi_p, const TrainConfig& config,
                          std::size_t unlabelled_sample_count) {
  if (!(pi_p > 0.0 && pi_p < 1.0)) throw ConfigError("pi_p must lie in (0, 1)");
  if (unlabelled_sample_count == 0) throw ConfigError("unlabelled sample count must be positive");
  const auto spec = LossSpec::nnre(pi_p, config.nnre_surrogate, config.gamma);
  const auto unl = sample_unlabelled(ctx, unlabelled_sample_count, derive_seed(config.seed, kUnlabelled));
  return train_classifier(ctx, ctx.labels.positives(), unl, spec, config);
}

PnPuResult train_pn_pu(const TrainingContext& ctx, const ClusterAssignment& clusters, const RetrievalParams& params,
                       const TrainConfig& config) {
  PnPuResult out;
  out.retrieval = score_unlabelled(ctx.labels, &clusters, params);

  // Validation pixels are held out of the negative pool.
  RetrievalScores pool = out.retrieval;
  if (ctx.validation) {
    pool.pixels.clear();
    pool.scores.clear();
    for (std::size_t i = 0; i < out.retrieval.pixels.size(); ++i) {
      if (ctx.validation->contains(out.retrieval.pixels[i])) continue;
      pool.pixels.push_back(out.retrieval.pixels[i]);
      pool.scores.push_back(out.retrieval.scores[i]);
    }
  }
  out.negatives = sample_negatives(pool, ctx.labels.positive_count(), derive_seed(config.seed, kNegatives));
  out.train = train_classifier(ctx, ctx.labels.positives(), out.negatives, LossSpec::pn(), config);
  return out;
}

std::vector<double> score_pixels(const Classifier& net, const HsiCube& cube, int patch_size,
                                 std::span<const PixelCoord> pixels) {
  constexpr std::size_t kChunk = 4096;
  std::vector<double> scores;
  scores.reserve(pixels.size());
  for (std::size_t start = 0; start < pixels.size(); start += kChunk) {
    const auto part = pixels.subspan(start, std::min(kChunk, pixels.size() - start));
    const auto inputs = gather_patches(cube, part, patch_size);
    const auto s = net.forward_batch(inputs, part.size());
    scores.insert(scores.end(), s.begin(), s.end());
  }
  return scores;
}

PredictionMap predict_map(const Classifier& net, const HsiCube& cube, int patch_size, double threshold) {
  std::vector<PixelCoord> all(cube.pixel_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = cube.coord_of(i);
  PredictionMap map;
  map.rows = cube.rows();
  map.cols = cube.cols();
  map.scores = score_pixels(net, cube, patch_size, all);
  map.positive.resize(map.scores.size());
  for (std::size_t i = 0; i < map.scores.size(); ++i) map.positive[i] = map.scores[i] >= threshold;
  return map;
}

const char* to_string(EarlyStop e) {
  switch (e) {
    case EarlyStop::val_loss_rise: return "val_loss_rise";
    case EarlyStop::val_recall_drop: return "val_recall_drop";
    case EarlyStop::none: return "none";
  }
  return "none";
}

EarlyStop early_stop_from_string(const std::string& s) {
  if (s == "val_loss_rise") return EarlyStop::val_loss_rise;
  if (s == "val_recall_drop") return EarlyStop::val_recall_drop;
  if (s == "none") return EarlyStop::none;
  throw ConfigError("unknown early_stop '" + s + "' (expected val_loss_rise, val_recall_drop or none)");
}

}  // namespace punch
