// Serial reference kernels vs their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <map>
#include <numeric>
#include <random>

#include "dtco/kernels.hpp"
#include "dtco/refdev.hpp"
#include "dtco/rng.hpp"

using namespace dtco;

namespace {

struct Data {
  MLPParams p = init_mlp(MLPSpec::hidden(2, 32), 1);
  std::vector<double> x, y;
  std::vector<std::size_t> rows;
  std::vector<BiasPoint> bias;

  explicit Data(std::size_t n) {
    std::mt19937_64 gen(7);
    for (std::size_t i = 0; i < 3 * n; ++i) {
      x.push_back(uniform(gen, -1, 1));
      y.push_back(uniform(gen, -1, 1));
    }
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), 0);
    for (std::size_t i = 0; i < n; ++i) bias.push_back({uniform(gen, 0, 0.9), uniform(gen, 0, 0.9), uniform(gen, 0, 0.9)});
  }
};

const Data& data(std::size_t n) {
  static std::map<std::size_t, Data> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Data(n)).first;
  return it->second;
}

template <bool Parallel>
void BM_ForwardBatch(benchmark::State& st) {
  const auto& d = data(static_cast<std::size_t>(st.range(0)));
  std::vector<double> out(d.x.size());
  for (auto _ : st) {
    if constexpr (Parallel) kernels::forward_batch(d.p, d.x, out);
    else kernels::serial::forward_batch(d.p, d.x, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_BatchGradient(benchmark::State& st) {
  const auto& d = data(static_cast<std::size_t>(st.range(0)));
  std::vector<double> g(d.p.data.size());
  for (auto _ : st) {
    double sq = Parallel ? kernels::batch_gradient(d.p, d.x, d.y, d.rows, g)
                         : kernels::serial::batch_gradient(d.p, d.x, d.y, d.rows, g);
    benchmark::DoNotOptimize(sq);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_EvaluateDevices(benchmark::State& st) {
  const auto& d = data(static_cast<std::size_t>(st.range(0)));
  const RefTFET dev;
  std::vector<DeviceResponse> out(d.bias.size());
  for (auto _ : st) {
    if constexpr (Parallel) kernels::evaluate_devices(dev, d.bias, out);
    else kernels::serial::evaluate_devices(dev, d.bias, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_ForwardBatch<false>)->Arg(256)->Arg(4096)->Name("forward_batch/serial");
BENCHMARK(BM_ForwardBatch<true>)->Arg(256)->Arg(4096)->Name("forward_batch/omp");
BENCHMARK(BM_BatchGradient<false>)->Arg(256)->Arg(4096)->Name("batch_gradient/serial");
BENCHMARK(BM_BatchGradient<true>)->Arg(256)->Arg(4096)->Name("batch_gradient/omp");
BENCHMARK(BM_EvaluateDevices<false>)->Arg(4096)->Arg(50000)->Name("evaluate_devices/serial");
BENCHMARK(BM_EvaluateDevices<true>)->Arg(4096)->Arg(50000)->Name("evaluate_devices/omp");

BENCHMARK_MAIN();
