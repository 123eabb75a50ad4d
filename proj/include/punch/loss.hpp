#pragma once

#include <span>
#include <string>
#include <vector>

namespace punch {

enum class LossKind { pn_cross_entropy, nnre_pu };
enum class Surrogate { logistic, sigmoid };

struct LossSpec {
  LossKind kind = LossKind::pn_cross_entropy;
  Surrogate surrogate = Surrogate::logistic;
  double pi_p = 0.0;  // class prior, nnre_pu only
  double gamma = 1.0;  // defuse step scale, nnre_pu only

  static LossSpec pn() { return {}; }
  static LossSpec nnre(double pi_p, Surrogate s = Surrogate::sigmoid, double gamma = 1.0) {
    return {LossKind::nnre_pu, s, pi_p, gamma};
  }
  void validate() const;
};

inline constexpr double kScoreClamp = 1e-12;

/// l(g(X), y) written in terms of the sigmoid score s = g(X) and y in {+1, -1}:
///   logistic: -ln s (y = +1), -ln(1 - s) (y = -1), scores clamped 1e-12 from {0, 1}
///   sigmoid:  1 - s (y = +1), s (y = -1)
double surrogate_loss(double score, bool positive, Surrogate s);

/// d l / d logit, where score = sigmoid(logit).
double surrogate_dlogit(double score, bool positive, Surrogate s);

/// Mean binary cross entropy; labels are 0 or 1.
double pn_loss(std::span<const double> scores, std::span<const double> labels);

/// Per-example d(pn_loss)/d(logit): (s - y) / n.
std::vector<double> pn_loss_dlogit(std::span<const double> scores, std::span<const double> labels);

struct NnreRisk {
  double positive_risk = 0.0;           // R_p^+
  double positive_as_negative = 0.0;    // R_p^-
  double unlabelled_as_negative = 0.0;  // R_u^- (weighted mean when weights are given)
  double correction = 0.0;              // R_u^- - pi_p R_p^-
  double total = 0.0;                   // pi_p R_p^+ + max(0, correction)

  /// pi_p R_p^+ - pi_p R_p^- + R_u^-, unclipped.
  double unbiased(double pi_p) const { return pi_p * positive_risk + correction; }
};

/// Non-negative PU risk. `unlabelled_weights`, when non-empty, turns R_u^-
/// into a weighted mean.
NnreRisk nnre_pu_loss(std::span<const double> scores_p, std::span<const double> scores_u,
                      const LossSpec& spec, std::span<const double> unlabelled_weights = {});

struct NnreGradient {
  std::vector<double> positives;   // d objective / d logit for each positive
  std::vector<double> unlabelled;  // same for each unlabelled example
  NnreRisk risk;
  bool defused = false;            // correction < 0: descend -gamma * correction
};

/// Gradient of pi_p R_p^+ + correction when correction >= 0, otherwise of
/// -gamma * correction alone.
NnreGradient nnre_pu_dlogit(std::span<const double> scores_p, std::span<const double> scores_u,
                            const LossSpec& spec, std::span<const double> unlabelled_weights = {});

/// pi_p R_p^+ + (1 - pi_p) R_n^-, the positive-negative risk on labelled data.
double pn_risk(std::span<const double> scores_p, std::span<const double> scores_n, double pi_p, Surrogate s);

const char* to_string(LossKind k);
const char* to_string(Surrogate s);
Surrogate surrogate_from_string(const std::string& s);

}  // namespace punch
