// Microbenchmarks for the hot paths: gaussian sampling, parameter init, the
// forward pass, and the layerwise directional-derivative product. Run with
// --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include <vector>

#include "maxgrad/network.hpp"
#include "maxgrad/order_stats.hpp"
#include "maxgrad/rng.hpp"

using namespace maxgrad;

namespace {

net::Architecture bench_arch(int width, int layers, int rank) {
    net::Architecture a;
    a.input_width = width;
    a.hidden_widths.assign(static_cast<std::size_t>(layers), width);
    a.output_width = width;
    a.maxout_rank = rank;
    return a;
}

void BM_GaussianDraw(benchmark::State& state) {
    rng::Stream stream(42, 0);
    double acc = 0.0;
    for (auto _ : state) acc += stream.gaussian();
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_GaussianDraw);

void BM_InitParams(benchmark::State& state) {
    const net::Architecture arch =
        bench_arch(static_cast<int>(state.range(0)), 4, 5);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        rng::Stream stream(seed++, 0);
        const net::ParamSet p = net::init_params_stream(arch, 0.55555, stream);
        benchmark::DoNotOptimize(p.w_out.data());
    }
    const net::ParamSet probe = net::init_params(arch, {0.55555, 0});
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(probe.scalar_count()));
}
BENCHMARK(BM_InitParams)->Arg(20)->Arg(50)->Arg(100);

void BM_Forward(benchmark::State& state) {
    const net::Architecture arch =
        bench_arch(static_cast<int>(state.range(0)), 4, 5);
    const net::ParamSet p = net::init_params(arch, {0.55555, 7});
    const std::vector<double> x(static_cast<std::size_t>(arch.input_width), 0.5);
    for (auto _ : state) {
        const auto trace = net::forward(p, x);
        benchmark::DoNotOptimize(trace.output.data());
    }
}
BENCHMARK(BM_Forward)->Arg(20)->Arg(50)->Arg(100);

void BM_DirectionalDerivativeSq(benchmark::State& state) {
    const net::Architecture arch =
        bench_arch(static_cast<int>(state.range(0)), 4, 5);
    const net::ParamSet p = net::init_params(arch, {0.55555, 7});
    std::vector<double> x(static_cast<std::size_t>(arch.input_width), 0.5);
    std::vector<double> u(x.size(), 0.0);
    u[0] = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(net::directional_derivative_sq(p, x, u));
    }
}
BENCHMARK(BM_DirectionalDerivativeSq)->Arg(20)->Arg(50)->Arg(100);

void BM_OrderStatConstants(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(order_stats::compute_constants(k));
    }
}
BENCHMARK(BM_OrderStatConstants)->Arg(2)->Arg(5)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
