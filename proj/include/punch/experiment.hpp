#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "punch/annotator.hpp"
#include "punch/labels.hpp"
#include "punch/metrics.hpp"
#include "punch/retrieval.hpp"
#include "punch/scene_io.hpp"
#include "punch/synthetic.hpp"
#include "punch/training.hpp"

namespace punch {

enum class Method { nnre_pu, pn_pu };

struct ExperimentConfig {
  std::string preset;  // informational once applied
  std::string scene_path;                   // hscn-1 header; empty means synthetic
  std::optional<SyntheticSpec> synthetic;   // used when scene_path is empty
  std::uint64_t scene_seed = 0;
  std::uint16_t positive_class = 2;
  std::optional<LabelState> labels;         // given labels bypass the annotator
  AnnotationModel annotation = AnnotationModel::uniform;
  double fraction = 0.10;
  std::uint64_t annotation_seed = 0;
  Method method = Method::nnre_pu;
  std::optional<double> pi_p;               // nullopt means the ground-truth prior
  RetrievalParams retrieval;
  int clusters = 0;                         // 0 means the ground-truth class count
  int patch_size = 3;
  std::size_t unlabelled_samples = 5000;
  TrainConfig train;
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t seed = 0;
  std::string cache_dir;                    // clustering cache; not hashed

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// Defaults, then the named preset, then `file`, then `flags` (JSON merge
/// patches in that order). The preset name may come from either layer.
ExperimentConfig resolve_config(const nlohmann::json& file, const nlohmann::json& flags);

/// Retrieval baseline/temperature overrides for a named scene family.
nlohmann::json preset_patch(const std::string& name);
std::vector<std::string> preset_names();

/// FNV-1a over the canonical config JSON (cache_dir excluded).
std::string config_hash(const ExperimentConfig& c);

struct PreparedScene {
  HsiCube cube;  // normalized
  std::optional<ClassGrid> ground_truth;
};

PreparedScene prepare_scene(const ExperimentConfig& c);

/// Given labels or simulated annotation of the positive class.
LabelState resolve_labels(const ExperimentConfig& c, const PreparedScene& scene);

/// Positive share of ground-truth-annotated pixels.
double true_prior(const ClassGrid& gt, std::uint16_t positive_class);

/// Number of distinct non-zero classes.
int class_count(const ClassGrid& gt);

struct Evaluation {
  std::optional<OperatingPoint> operating_point;  // set when validation has both classes
  double threshold = 0.5;
  EvalReport report;
  std::vector<std::uint8_t> predicted;
  std::vector<std::uint8_t> mask;  // evaluation universe
  std::size_t universe = 0;
};

/// Threshold from the validation ROC at `pi_p`, then metrics over the
/// annotated pixels outside I_L+ and the validation split.
Evaluation evaluate_map(std::span<const double> scores, const ClassGrid& gt, std::uint16_t positive_class,
                        const LabelState& labels, const ValidationSet* validation, double pi_p, double alpha,
                        double beta);

/// Labels, validation split and prior as a run would resolve them.
struct RunSetup {
  LabelState labels;
  ValidationSet validation;
  std::optional<double> pi_p;
  std::string pi_p_source;  // "given", "ground_truth" or "none"
};
RunSetup setup_run(const ExperimentConfig& c, const PreparedScene& scene);

using ProgressFn = std::function<void(const EpochMetrics&)>;

struct TrainedModel {
  TrainResult train;
  std::vector<PixelCoord> negatives;  // pn_pu only
  int clusters = 0;                   // pn_pu only
};
TrainedModel train_model(const ExperimentConfig& c, const PreparedScene& scene, const RunSetup& setup,
                         const ProgressFn& progress = {});

nlohmann::json epoch_log_json(const std::vector<EpochMetrics>& log, const std::string& config_hash,
                              std::uint64_t seed);

/// Little-endian float32, row-major.
void write_scores_f32(const std::filesystem::path& path, std::span<const double> scores);
std::vector<double> read_scores_f32(const std::filesystem::path& path, std::size_t expected);

struct ExperimentResult {
  std::string config_hash;
  double pi_p = 0.0;
  std::string pi_p_source;  // "given" or "ground_truth"
  Evaluation evaluation;
  TrainResult train;
  PredictionMap map;
  nlohmann::json report;
};

/// Runs the whole pipeline and writes config.json, labels.json,
/// training_data.png, scores.pgm, scores.f32, prediction.png, confusion.png
/// (with ground truth), report.json, epochs.json and classifier.pnch into
/// `out_dir`.
ExperimentResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                const ProgressFn& progress = {});
ExperimentResult run_experiment(const ExperimentConfig& c, const PreparedScene& scene,
                                const std::filesystem::path& out_dir, const ProgressFn& progress = {});

struct SweepRow {
  double pi_p = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_score;
  std::optional<double> auc;
  bool is_true = false;
};

/// One NNRE-PU run per value, ascending. Throws ConfigError on an empty list.
std::vector<SweepRow> pi_p_sweep(const ExperimentConfig& c, std::vector<double> values,
                                 const std::filesystem::path& out_dir);

/// CSV with header pi_p,precision,recall,f_score,auc,is_true,true_pi_p.
std::string sweep_csv(const std::vector<SweepRow>& rows, std::optional<double> true_pi_p);

const char* to_string(Method m);
Method method_from_string(const std::string& s);

}  // namespace punch
