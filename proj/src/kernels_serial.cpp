#include <algorithm>
#include <cmath>
#include <limits>

#include "punch/kernels.hpp"

namespace punch::kernels::serial {

void assign_nearest(std::span<const double> points, std::size_t dim,
                    std::span<const double> centroids, std::span<int> labels,
                    std::span<double> dist2) {
  const std::size_t n = points.size() / dim;
  const std::size_t k = centroids.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
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
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      long best = std::numeric_limits<long>::max();
      for (const auto& s : sites) {
        const long dr = r - s.row, dc = c - s.col;
        best = std::min(best, dr * dr + dc * dc);
      }
      out[static_cast<std::size_t>(r) * cols + c] =
          sites.empty() ? std::numeric_limits<double>::infinity() : std::sqrt(static_cast<double>(best));
    }
  }
}

void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> input, std::size_t batch, std::size_t in_dim,
                   std::size_t out_dim, std::span<double> output) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = input.data() + b * in_dim;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* w = weights.data() + o * in_dim;
      double acc = bias[o];
      for (std::size_t i = 0; i < in_dim; ++i) acc += w[i] * x[i];
      output[b * out_dim + o] = acc;
    }
  }
}

void dense_weight_grad(std::span<const double> delta, std::span<const double> input,
                       std::size_t batch, std::size_t in_dim, std::size_t out_dim,
                       std::span<double> grad_weights, std::span<double> grad_bias) {
  for (std::size_t o = 0; o < out_dim; ++o) {
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
  for (std::size_t b = 0; b < batch; ++b) {
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

}  // namespace punch::kernels::serial
