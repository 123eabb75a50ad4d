#include "punch/loss.hpp"

#include <algorithm>
#include <cmath>

#include "punch/error.hpp"

namespace punch {

void LossSpec::validate() const {
  if (kind == LossKind::nnre_pu) {
    if (!(pi_p > 0.0 && pi_p < 1.0)) {
      throw ConfigError("nnre_pu needs a class prior pi_p in (0, 1), got " + std::to_string(pi_p));
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("defuse step gamma must lie in (0, 1]");
  } else if (pi_p != 0.0) {
    throw ConfigError("pi_p is only meaningful for nnre_pu");
  }
}

namespace {

double clamp_score(double s) { return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp); }

double weighted_mean_negative(std::span<const double> scores, std::span<const double> weights, Surrogate s) {
  double acc = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    acc += w * surrogate_loss(scores[i], false, s);
    wsum += w;
  }
  if (!(wsum > 0.0)) throw NumericError("unlabelled weights sum to zero");
  return acc / wsum;
}

}  // namespace

double surrogate_loss(double score, bool positive, Surrogate s) {
  if (s == Surrogate::sigmoid) return positive ? 1.0 - score : score;
  const double c = clamp_score(score);
  return positive ? -std::log(c) : -std::log1p(-c);
}

double surrogate_dlogit(double score, bool positive, Surrogate s) {
  if (s == Surrogate::sigmoid) {
    const double ds = score * (1.0 - score);
    return positive ? -ds : ds;
  }
  return positive ? score - 1.0 : score;
}

double pn_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ConfigError("scores and labels differ in length");
  if (scores.empty()) throw ConfigError("pn_loss on an empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = clamp_score(scores[i]);
    acc -= labels[i] * std::log(s) + (1.0 - labels[i]) * std::log1p(-s);
  }
  return acc / static_cast<double>(scores.size());
}

std::vector<double> pn_loss_dlogit(std::span<const double> scores, std::span<const double> labels) {
  std::vector<double> g(scores.size());
  const double inv = 1.0 / static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) g[i] = (scores[i] - labels[i]) * inv;
  return g;
}

NnreRisk nnre_pu_loss(std::span<const double> scores_p, std::span<const double> scores_u,
                      const LossSpec& spec, std::span<const double> unlabelled_weights) {
  if (spec.kind != LossKind::nnre_pu) throw ConfigError("nnre_pu_loss needs an nnre_pu loss spec");
  spec.validate();
  if (scores_p.empty()) throw ConfigError("nnre_pu_loss needs at least one labelled positive");
  if (scores_u.empty()) throw ConfigError("nnre_pu_loss needs at least one unlabelled example");
  if (!unlabelled_weights.empty() && unlabelled_weights.size() != scores_u.size()) {
    throw ConfigError("unlabelled weights differ in length from unlabelled scores");
  }
  NnreRisk r;
  for (double s : scores_p) {
    r.positive_risk += surrogate_loss(s, true, spec.surrogate);
    r.positive_as_negative += surrogate_loss(s, false, spec.surrogate);
  }
  r.positive_risk /= static_cast<double>(scores_p.size());
  r.positive_as_negative /= static_cast<double>(scores_p.size());
  r.unlabelled_as_negative = weighted_mean_negative(scores_u, unlabelled_weights, spec.surrogate);
  r.correction = r.unlabelled_as_negative - spec.pi_p * r.positive_as_negative;
  r.total = spec.pi_p * r.positive_risk + std::max(0.0, r.correction);
  return r;
}

NnreGradient nnre_pu_dlogit(std::span<const double> scores_p, std::span<const double> scores_u,
                            const LossSpec& spec, std::span<const double> unlabelled_weights) {
  NnreGradient g;
  g.risk = nnre_pu_loss(scores_p, scores_u, spec, unlabelled_weights);
  g.defused = g.risk.correction < 0.0;
  const double pi = spec.pi_p;
  const double inv_p = 1.0 / static_cast<double>(scores_p.size());
  double wsum = 0.0;
  for (std::size_t j = 0; j < scores_u.size(); ++j) wsum += unlabelled_weights.empty() ? 1.0 : unlabelled_weights[j];

  g.positives.resize(scores_p.size());
  g.unlabelled.resize(scores_u.size());
  if (!g.defused) {
    for (std::size_t i = 0; i < scores_p.size(); ++i) {
      g.positives[i] = pi * inv_p *
                       (surrogate_dlogit(scores_p[i], true, spec.surrogate) -
                        surrogate_dlogit(scores_p[i], false, spec.surrogate));
    }
    for (std::size_t j = 0; j < scores_u.size(); ++j) {
      const double w = unlabelled_weights.empty() ? 1.0 : unlabelled_weights[j];
      g.unlabelled[j] = w / wsum * surrogate_dlogit(scores_u[j], false, spec.surrogate);
    }
  } else {
    // Defuse: step along -gamma * grad(correction) only, pushing the
    // negative-class risk estimate back up towards zero.
    for (std::size_t i = 0; i < scores_p.size(); ++i) {
      g.positives[i] = spec.gamma * pi * inv_p * surrogate_dlogit(scores_p[i], false, spec.surrogate);
    }
    for (std::size_t j = 0; j < scores_u.size(); ++j) {
      const double w = unlabelled_weights.empty() ? 1.0 : unlabelled_weights[j];
      g.unlabelled[j] = -spec.gamma * w / wsum * surrogate_dlogit(scores_u[j], false, spec.surrogate);
    }
  }
  return g;
}

double pn_risk(std::span<const double> scores_p, std::span<const double> scores_n, double pi_p, Surrogate s) {
  if (scores_p.empty() || scores_n.empty()) throw ConfigError("pn_risk needs both classes");
  double rp = 0.0, rn = 0.0;
  for (double v : scores_p) rp += surrogate_loss(v, true, s);
  for (double v : scores_n) rn += surrogate_loss(v, false, s);
  return pi_p * rp / static_cast<double>(scores_p.size()) +
         (1.0 - pi_p) * rn / static_cast<double>(scores_n.size());
}

const char* to_string(LossKind k) { return k == LossKind::nnre_pu ? "nnre_pu" : "pn_cross_entropy"; }

const char* to_string(Surrogate s) { return s == Surrogate::sigmoid ? "sigmoid" : "logistic"; }

Surrogate surrogate_from_string(const std::string& s) {
  if (s == "logistic") return Surrogate::logistic;
  if (s == "sigmoid") return Surrogate::sigmoid;
  throw ConfigError("unknown surrogate '" + s + "' (expected logistic or sigmoid)");
}

}  // namespace punch
