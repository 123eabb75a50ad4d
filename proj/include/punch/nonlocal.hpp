#pragma once

#include <functional>
#include <span>
#include <vector>

#include "punch/cube.hpp"

namespace punch {

/// Per-pixel real values over the scene grid (a cluster labelling function).
struct LabelFunction {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double at(PixelCoord p) const { return values[static_cast<std::size_t>(p.row) * cols + p.col]; }
};

using Divergence = std::function<double(PixelCoord, PixelCoord)>;

/// Euclidean distance between the two pixels' spectra.
Divergence spectral_divergence(const HsiCube& cube);

/// (u(y) - u(x)) / d(x, y). Throws NumericError when d(x, y) is zero.
double nonlocal_derivative(const LabelFunction& u, PixelCoord x, PixelCoord y, const Divergence& d);

/// sqrt(w) * (u(y) - u(x)) with w = d^-2; algebraically the same quantity.
double nonlocal_derivative_weighted(const LabelFunction& u, PixelCoord x, PixelCoord y, const Divergence& d);

inline double nonlocal_weight(double divergence) { return 1.0 / (divergence * divergence); }

struct NonlocalEdge {
  PixelCoord from;
  PixelCoord to;
  double divergence = 0.0;
  double weight() const { return nonlocal_weight(divergence); }
};

/// Directed edges from each node of a region to its nearest neighbours by
/// divergence. Pairs at zero divergence carry no finite weight and are
/// left out.
class NonlocalGraph {
 public:
  NonlocalGraph() = default;
  explicit NonlocalGraph(std::vector<NonlocalEdge> edges);

  /// K nearest neighbours within `region` under `d` (brute force).
  static NonlocalGraph k_nearest(std::span<const PixelCoord> region, const Divergence& d, int k);

  const std::vector<NonlocalEdge>& edges() const { return edges_; }

 private:
  std::vector<NonlocalEdge> edges_;
};

/// S(u) = sum_x u(x)^2 * r(x) for a caller-supplied residual r.
std::function<double(const LabelFunction&)> quadratic_fidelity(std::vector<double> residual);

/// sum over edges |sqrt(w) (u(y) - u(x))| + lambda * S(u). Evaluation only.
double nltv_objective(const LabelFunction& u, const NonlocalGraph& graph,
                      const std::function<double(const LabelFunction&)>& fidelity, double lambda);

}  // namespace punch
