#include "punch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "punch/error.hpp"

namespace punch {

using nlohmann::json;

RocResult roc_and_auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
  if (scores.size() != truth.size()) throw DataError("scores and truth differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult out;
  auto& roc = out.curve;
  for (auto t : truth) (t ? roc.positives : roc.negatives)++;
  if (roc.positives == 0 || roc.negatives == 0) {
    throw DataError("ROC needs both classes in the truth labels");
  }
  const double top = scores.empty() ? 1.0 : scores[order.front()];
  roc.points.push_back({0.0, 0.0, std::nextafter(top, INFINITY), 0, 0});

  // Twice the area in units of (1/P)(1/N), accumulated exactly.
  std::uint64_t area2 = 0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) (truth[order[i]] ? tp : fp)++;
    area2 += static_cast<std::uint64_t>(fp - fp0) * (tp + tp0);
    roc.points.push_back({static_cast<double>(fp) / roc.negatives, static_cast<double>(tp) / roc.positives, s, tp, fp});
  }
  out.auc = static_cast<double>(area2) / (2.0 * static_cast<double>(roc.positives) * static_cast<double>(roc.negatives));
  return out;
}

double misclassification_cost(double fpr, double tpr, double pi_p, double alpha, double beta) {
  return (1.0 - pi_p) * alpha * fpr + pi_p * beta * (1.0 - tpr);
}

OperatingPoint select_operating_point(const RocCurve& roc, double pi_p, double alpha, double beta) {
  if (roc.points.empty()) throw DataError("cannot select an operating point on an empty ROC curve");
  if (!(alpha > 0.0 && beta > 0.0)) throw ConfigError("misclassification costs alpha and beta must be positive");
  if (!(pi_p >= 0.0 && pi_p <= 1.0)) throw ConfigError("pi_p must lie in [0, 1]");
  std::size_t best = 0;
  double best_cost = INFINITY;
  for (std::size_t i = 0; i < roc.points.size(); ++i) {
    const auto& p = roc.points[i];
    const double c = misclassification_cost(p.fpr, p.tpr, pi_p, alpha, beta);
    if (c < best_cost || (c == best_cost && p.tpr > roc.points[best].tpr)) {
      best_cost = c;
      best = i;
    }
  }
  const auto& p = roc.points[best];
  return {p.threshold, best_cost, p.fpr, p.tpr, alpha, beta, pi_p, best};
}

ConfusionMap confusion_map(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                           std::span<const std::uint8_t> mask) {
  if (predicted.size() != truth.size() || truth.size() != mask.size()) {
    throw DataError("prediction, truth and mask grids are not congruent");
  }
  ConfusionMap m;
  m.outcomes.resize(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    Outcome o = Outcome::ignored;
    if (mask[i]) {
      if (predicted[i]) {
        o = truth[i] ? Outcome::true_positive : Outcome::false_positive;
        (truth[i] ? m.counts.tp : m.counts.fp)++;
      } else {
        o = truth[i] ? Outcome::false_negative : Outcome::true_negative;
        (truth[i] ? m.counts.fn : m.counts.tn)++;
      }
    }
    m.outcomes[i] = o;
  }
  return m;
}

EvalReport prf(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
               std::span<const std::uint8_t> mask) {
  auto m = confusion_map(predicted, truth, mask);
  EvalReport r;
  r.counts = m.counts;
  const auto& c = m.counts;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
    r.f_score = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  r.confusion_map = std::move(m.outcomes);
  return r;
}

Rgb outcome_colour(Outcome o) {
  switch (o) {
    case Outcome::true_positive: return {0, 200, 0};
    case Outcome::false_positive: return {220, 0, 0};
    case Outcome::true_negative: return {64, 64, 64};
    case Outcome::false_negative: return {0, 80, 255};
    case Outcome::ignored: return {0, 0, 0};
  }
  return {0, 0, 0};
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = r;
    i = j;
  }
  return rank;
}

}  // namespace

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const EvalReport& r) {
  return {{"precision", opt(r.precision)},
          {"recall", opt(r.recall)},
          {"f_score", opt(r.f_score)},
          {"auc", opt(r.auc)},
          {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}}};
}

json to_json(const OperatingPoint& op) {
  return {{"threshold", op.threshold}, {"cost", op.cost}, {"fpr", op.fpr}, {"tpr", op.tpr},
          {"alpha", op.alpha},         {"beta", op.beta}, {"pi_p", op.pi_p}};
}

}  // namespace punch
