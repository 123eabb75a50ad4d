// Serial reference vs OpenMP kernels on scene-sized inputs.
//   ./bench_kernels --benchmark_filter=assign

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "punch/kernels.hpp"

namespace k = punch::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <auto Fn>
void assign_nearest(benchmark::State& state) {
  const std::size_t n = 145 * 145, dim = 200, clusters = 16;
  const auto points = random_vec(n * dim, 1);
  const auto centroids = random_vec(clusters * dim, 2);
  std::vector<int> labels(n);
  std::vector<double> dist(n);
  for (auto _ : state) {
    Fn(points, dim, centroids, labels, dist);
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <auto Fn>
void nearest_site(benchmark::State& state) {
  const int rows = 145, cols = 145;
  std::vector<punch::PixelCoord> sites;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 150; ++i) sites.push_back({static_cast<int>(rng() % rows), static_cast<int>(rng() % cols)});
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (auto _ : state) {
    Fn(rows, cols, sites, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void dense_forward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0)), in = 9 * 200, out = 100;
  const auto w = random_vec(out * in, 4);
  const auto b = random_vec(out, 5);
  const auto x = random_vec(batch * in, 6);
  std::vector<double> y(batch * out);
  for (auto _ : state) {
    Fn(w, b, x, batch, in, out, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}

template <auto Fn>
void dense_weight_grad(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0)), in = 9 * 200, out = 100;
  const auto delta = random_vec(batch * out, 7);
  const auto x = random_vec(batch * in, 8);
  std::vector<double> gw(out * in), gb(out);
  for (auto _ : state) {
    Fn(delta, x, batch, in, out, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
}

}  // namespace

BENCHMARK(assign_nearest<k::serial::assign_nearest>)->Name("assign_nearest/serial");
BENCHMARK(assign_nearest<k::omp::assign_nearest>)->Name("assign_nearest/omp");
BENCHMARK(nearest_site<k::serial::nearest_site_distance>)->Name("nearest_site/serial");
BENCHMARK(nearest_site<k::omp::nearest_site_distance>)->Name("nearest_site/omp");
BENCHMARK(dense_forward<k::serial::dense_forward>)->Name("dense_forward/serial")->Arg(64)->Arg(4096);
BENCHMARK(dense_forward<k::omp::dense_forward>)->Name("dense_forward/omp")->Arg(64)->Arg(4096);
BENCHMARK(dense_weight_grad<k::serial::dense_weight_grad>)->Name("dense_weight_grad/serial")->Arg(64)->Arg(1024);
BENCHMARK(dense_weight_grad<k::omp::dense_weight_grad>)->Name("dense_weight_grad/omp")->Arg(64)->Arg(1024);

BENCHMARK_MAIN();
