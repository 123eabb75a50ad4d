#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "punch/kernels.hpp"

namespace punch::kernels::omp {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void assign_nearest(std::span<const double> points, std::size_t dim,
                    std::span<const double> centroids, std::span<int> labels,
                    std::span<double> dist2) {
  const auto n = static_cast<std::ptrdiff_t>(points.size() / dim);
  const std::size_t k = centroids.size() / dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* x = points.data() + i * dim;
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double* m = centroids.data() + c * dim;
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double t = x[j] - m[j];
        d += t * t;
      }
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    dist2[i] = best;
  }
}

void nearest_site_distance(int rows, int cols, std::span<const PixelCoord> sites,
                           std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(rows) * cols;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    const long r = idx / cols, c = idx % cols;
    long best = std::numeric_limits<long>::max();
    for (const auto& s : sites) {
      const long dr = r - s.row, dc = c - s.col;
      best = std::min(best, dr * dr + dc * dc);
    }
    out[idx] = sites.empty() ? std::numeric_limits<double>::infinity() : std::sqrt(static_cast<double>(best));
  }
}

void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> input, std::size_t batch, std::size_t in_dim,
                   std::size_t out_dim, std::span<double> output) {
  const auto total = static_cast<std::ptrdiff_t>(batch * out_dim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < total; ++t) {
    const std::size_t b = t / out_dim, o = t % out_dim;
    const double* x = input.data() + b * in_dim;
    const double* w = weights.data() + o * in_dim;
    double acc = bias[o];
    for (std::size_t i = 0; i < in_dim; ++i) acc += w[i] * x[i];
    output[t] = acc;
  }
}

void dense_weight_grad(std::span<const double> delta, std::span<const double> input,
                       std::size_t batch, std::size_t in_dim, std::size_t out_dim,
                       std::span<double> grad_weights, std::span<double> grad_bias) {
  // One output unit per iteration; each sums the batch in index order.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(out_dim); ++o) {
    double* gw = grad_weights.data() + o * in_dim;
    std::fill(gw, gw + in_dim, 0.0);
    double gb = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double d = delta[b * out_dim + o];
      gb += d;
      if (d == 0.0) continue;
      const double* x = input.data() + b * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) gw[i] += d * x[i];
    }
    grad_bias[o] = gb;
  }
}

void dense_input_grad(std::span<const double> weights, std::span<const double> delta,
                      std::size_t batch, std::size_t in_dim, std::size_t out_dim,
                      std::span<double> grad_input) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(batch); ++b) {
    double* g = grad_input.data() + b * in_dim;
    std::fill(g, g + in_dim, 0.0);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double d = delta[b * out_dim + o];
      if (d == 0.0) continue;
      const double* w = weights.data() + o * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) g[i] += d * w[i];
    }
  }
}

}  // namespace punch::kernels::omp
