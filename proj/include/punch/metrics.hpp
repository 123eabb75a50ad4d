#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace punch {

struct RocPoint {
  double fpr = 0.0;  // x
  double tpr = 0.0;  // y
  double threshold = 0.0;  // predict positive when score >= threshold
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

/// Vertices from (0, 0) to (1, 1), one per distinct score plus the origin.
struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

/// Threshold sweep over distinct scores (ties share one vertex), AUC by
/// the trapezoidal rule. `truth` holds 0/1. Throws DataError when only one
/// class is present.
RocResult roc_and_auc(std::span<const double> scores, std::span<const std::uint8_t> truth);

struct OperatingPoint {
  double threshold = 0.0;
  double cost = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double pi_p = 0.0;
  std::size_t vertex = 0;
};

/// (1 - pi_p) * alpha * x + pi_p * beta * (1 - y)
double misclassification_cost(double fpr, double tpr, double pi_p, double alpha, double beta);

/// ROC vertex with least expected cost; ties go to the higher recall.
OperatingPoint select_operating_point(const RocCurve& roc, double pi_p, double alpha = 1.0, double beta = 1.0);

enum class Outcome : std::uint8_t { true_positive, false_positive, true_negative, false_negative, ignored };

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t evaluated() const { return tp + fp + tn + fn; }
};

/// Metrics with 0/0 reported as nullopt (serialized as JSON null).
struct EvalReport {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_score;
  std::optional<double> auc;
  ConfusionCounts counts;
  std::vector<Outcome> confusion_map;  // row-major, may be empty
};

/// Counts over pixels where mask != 0. Grids are row-major and congruent.
EvalReport prf(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
               std::span<const std::uint8_t> mask);

struct ConfusionMap {
  std::vector<Outcome> outcomes;
  ConfusionCounts counts;
};

ConfusionMap confusion_map(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                           std::span<const std::uint8_t> mask);

/// RGB colour per outcome: TP green, FP red, TN dark grey, FN blue,
/// ignored black.
struct Rgb {
  std::uint8_t r, g, b;
};
Rgb outcome_colour(Outcome o);

/// Spearman rank correlation with average ranks for ties; nullopt when
/// either side is constant.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const OperatingPoint& op);

}  // namespace punch
