#pragma once

#include <cstddef>
#include <span>

#include "punch/cube.hpp"

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP variant with identical per-element arithmetic, so both produce
// bitwise-equal results regardless of thread count. Row-major layouts
// throughout: matrices are (rows x cols) contiguous.

namespace punch::kernels {

namespace serial {

/// labels[i] = argmin_k |points[i] - centroids[k]|^2 (first index wins
/// ties); dist2[i] receives the minimum.
void assign_nearest(std::span<const double> points, std::size_t dim,
                    std::span<const double> centroids, std::span<int> labels,
                    std::span<double> dist2);

/// out[r * cols + c] = Euclidean grid distance from (r, c) to the nearest site.
void nearest_site_distance(int rows, int cols, std::span<const PixelCoord> sites,
                           std::span<double> out);

/// Y (batch x out) = X (batch x in) * W^T + b, where W is (out x in).
void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> input, std::size_t batch, std::size_t in_dim,
                   std::size_t out_dim, std::span<double> output);

/// dW (out x in) = delta^T * A and db = column sums of delta, summed over
/// the batch in index order.
void dense_weight_grad(std::span<const double> delta, std::span<const double> input,
                       std::size_t batch, std::size_t in_dim, std::size_t out_dim,
                       std::span<double> grad_weights, std::span<double> grad_bias);

/// dA (batch x in) = delta (batch x out) * W.
void dense_input_grad(std::span<const double> weights, std::span<const double> delta,
                      std::size_t batch, std::size_t in_dim, std::size_t out_dim,
                      std::span<double> grad_input);

}  // namespace serial

namespace omp {

void assign_nearest(std::span<const double> points, std::size_t dim,
                    std::span<const double> centroids, std::span<int> labels,
                    std::span<double> dist2);
void nearest_site_distance(int rows, int cols, std::span<const PixelCoord> sites,
                           std::span<double> out);
void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> input, std::size_t batch, std::size_t in_dim,
                   std::size_t out_dim, std::span<double> output);
void dense_weight_grad(std::span<const double> delta, std::span<const double> input,
                       std::size_t batch, std::size_t in_dim, std::size_t out_dim,
                       std::span<double> grad_weights, std::span<double> grad_bias);
void dense_input_grad(std::span<const double> weights, std::span<const double> delta,
                      std::size_t batch, std::size_t in_dim, std::size_t out_dim,
                      std::span<double> grad_input);

/// Worker count the OpenMP runtime will use (1 when built without OpenMP).
int max_threads();

}  // namespace omp

// The library calls these; they forward to the OpenMP variants.
using omp::assign_nearest;
using omp::dense_forward;
using omp::dense_input_grad;
using omp::dense_weight_grad;
using omp::nearest_site_distance;

}  // namespace punch::kernels
