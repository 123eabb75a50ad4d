#include "punch/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "punch/error.hpp"

namespace punch {

Divergence spectral_divergence(const HsiCube& cube) {
  return [&cube](PixelCoord x, PixelCoord y) {
    auto a = cube.spectrum(x);
    auto b = cube.spectrum(y);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
}

namespace {

double checked_divergence(PixelCoord x, PixelCoord y, const Divergence& d) {
  const double dxy = d(x, y);
  if (!(dxy > 0.0)) {
    throw NumericError("non-local derivative undefined: divergence between (" + std::to_string(x.row) +
                       "," + std::to_string(x.col) + ") and (" + std::to_string(y.row) + "," +
                       std::to_string(y.col) + ") is " + std::to_string(dxy));
  }
  return dxy;
}

}  // namespace

double nonlocal_derivative(const LabelFunction& u, PixelCoord x, PixelCoord y, const Divergence& d) {
  return (u.at(y) - u.at(x)) / checked_divergence(x, y, d);
}

double nonlocal_derivative_weighted(const LabelFunction& u, PixelCoord x, PixelCoord y, const Divergence& d) {
  return std::sqrt(nonlocal_weight(checked_divergence(x, y, d))) * (u.at(y) - u.at(x));
}

NonlocalGraph::NonlocalGraph(std::vector<NonlocalEdge> edges) : edges_(std::move(edges)) {
  for (const auto& e : edges_) {
    if (!(e.divergence > 0.0)) throw NumericError("non-local edge with non-positive divergence");
  }
}

NonlocalGraph NonlocalGraph::k_nearest(std::span<const PixelCoord> region, const Divergence& d, int k) {
  if (k < 1) throw ConfigError("neighbour count must be positive");
  std::vector<NonlocalEdge> edges;
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < region.size(); ++i) {
    cand.clear();
    for (std::size_t j = 0; j < region.size(); ++j) {
      if (i == j) continue;
      const double dij = d(region[i], region[j]);
      if (dij > 0.0) cand.emplace_back(dij, j);
    }
    const auto take = std::min<std::size_t>(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
    for (std::size_t t = 0; t < take; ++t) {
      edges.push_back({region[i], region[cand[t].second], cand[t].first});
    }
  }
  return NonlocalGraph(std::move(edges));
}

std::function<double(const LabelFunction&)> quadratic_fidelity(std::vector<double> residual) {
  return [r = std::move(residual)](const LabelFunction& u) {
    if (r.size() != u.values.size()) throw ConfigError("fidelity residual size does not match u");
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += u.values[i] * u.values[i] * r[i];
    return s;
  };
}

double nltv_objective(const LabelFunction& u, const NonlocalGraph& graph,
                      const std::function<double(const LabelFunction&)>& fidelity, double lambda) {
  if (lambda < 0.0) throw ConfigError("NLTV lambda must be non-negative");
  double tv = 0.0;
  for (const auto& e : graph.edges()) {
    tv += std::abs(std::sqrt(e.weight()) * (u.at(e.to) - u.at(e.from)));
  }
  return lambda == 0.0 ? tv : tv + lambda * fidelity(u);
}

}  // namespace punch
