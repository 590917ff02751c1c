#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gascast/dwt.hpp"
#include "gascast/matrix_profile.hpp"
#include "gascast/neural.hpp"

namespace {

std::vector<double> random_series(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) v = dist(rng);
    return x;
}

void BM_DwtRoundTrip(benchmark::State& state) {
    const auto x = random_series(static_cast<size_t>(state.range(0)), 1);
    const auto& bank = gascast::wavelets::filter_bank("db4");
    for (auto _ : state) {
        auto dec = gascast::wavelets::dwt_decompose(x, bank, 4);
        auto rec = gascast::wavelets::dwt_reconstruct(dec, bank);
        benchmark::DoNotOptimize(rec);
    }
}
BENCHMARK(BM_DwtRoundTrip)->Arg(1024)->Arg(8192);

void BM_MatrixProfileFast(benchmark::State& state) {
    const auto x = random_series(static_cast<size_t>(state.range(0)), 2);
    for (auto _ : state) {
        auto mp = gascast::mp::mp_fast(x, 50);
        benchmark::DoNotOptimize(mp);
    }
}
BENCHMARK(BM_MatrixProfileFast)->Arg(512)->Arg(2048);

void BM_MatrixProfileBrute(benchmark::State& state) {
    const auto x = random_series(static_cast<size_t>(state.range(0)), 2);
    for (auto _ : state) {
        auto mp = gascast::mp::mp_bruteforce(x, 50);
        benchmark::DoNotOptimize(mp);
    }
}
BENCHMARK(BM_MatrixProfileBrute)->Arg(512);

void BM_LstmForwardBackward(benchmark::State& state) {
    using namespace gascast::neural;
    std::vector<std::unique_ptr<Layer>> layers;
    layers.push_back(make_lstm(1, 50));
    layers.push_back(make_last_step());
    layers.push_back(make_dense(50, 1));
    Network net(make_sequential(std::move(layers)), {288, 1});
    net.init(7);
    Matrix x(288, 1);
    const auto noise = random_series(288, 3);
    for (size_t i = 0; i < 288; ++i) x.at(i, 0) = noise[i];
    Matrix dy(1, 1);
    dy.at(0, 0) = 1.0;
    for (auto _ : state) {
        auto y = net.forward(x);
        benchmark::DoNotOptimize(y);
        net.zero_grads();
        auto dx = net.backward(dy);
        benchmark::DoNotOptimize(dx);
    }
}
BENCHMARK(BM_LstmForwardBackward);

}  // namespace

BENCHMARK_MAIN();
