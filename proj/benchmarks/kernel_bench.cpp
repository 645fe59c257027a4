#include <benchmark/benchmark.h>

#include "ntk/dynamics.hpp"
#include "ntk/empirical.hpp"
#include "ntk/gram.hpp"
#include "ntk/rng.hpp"
#include "ntk/solvers.hpp"

namespace {

Eigen::MatrixXd unit_rows(int m, int cols, std::uint64_t seed) {
    ntk::NormalSampler rng(seed);
    Eigen::MatrixXd x(m, cols);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < cols; ++j) x(i, j) = rng();
        x.row(i) /= x.row(i).norm();
    }
    return x;
}

void BM_FcGram(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = unit_rows(m, 16, 1);
    const ntk::ArchSpec arch = ntk::ArchSpec::dense(3, 16);
    ntk::GramOptions options;
    options.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ntk::gram(x, arch, ntk::GramKind::NTK, options));
    }
    state.SetComplexityN(m);
}
BENCHMARK(BM_FcGram)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_ConvGramFullFilter(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    std::vector<int> offsets(d);
    std::iota(offsets.begin(), offsets.end(), 0);
    const ntk::ArchSpec arch = ntk::ArchSpec::conv1d(2, 1, d, offsets);
    const Eigen::MatrixXd x = unit_rows(4, d, 2);
    ntk::GramOptions options;
    options.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ntk::gram(x, arch, ntk::GramKind::NTK, options));
    }
    state.SetComplexityN(d);
}
BENCHMARK(BM_ConvGramFullFilter)->RangeMultiplier(2)->Range(4, 32)->Complexity();

void BM_RidgeSolve(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = unit_rows(m, 8, 3);
    const Eigen::MatrixXd g =
        ntk::gram(x, ntk::ArchSpec::dense(2, 8), ntk::GramKind::NTK).entries;
    const Eigen::VectorXd y = unit_rows(m, 1, 4).col(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ntk::ridge_solve_direct(g, y, 1e-3));
    }
    state.SetComplexityN(m);
}
BENCHMARK(BM_RidgeSolve)->RangeMultiplier(2)->Range(64, 512)->Complexity();

void BM_EmpiricalContraction(benchmark::State& state) {
    const int width = static_cast<int>(state.range(0));
    const ntk::FiniteNet net(ntk::ArchSpec::dense(3, 8, {width, width}),
                             ntk::Parameterization::NTK, 5);
    const Eigen::MatrixXd x = unit_rows(10, 8, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ntk::empirical_ntk_contraction(net, x));
    }
}
BENCHMARK(BM_EmpiricalContraction)->RangeMultiplier(4)->Range(64, 1024);

void BM_Eigendecomposition(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = unit_rows(m, 8, 7);
    const Eigen::MatrixXd g =
        ntk::gram(x, ntk::ArchSpec::dense(2, 8), ntk::GramKind::NTK).entries;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ntk::decompose(g));
    }
    state.SetComplexityN(m);
}
BENCHMARK(BM_Eigendecomposition)->RangeMultiplier(2)->Range(64, 512)->Complexity();

} // namespace

BENCHMARK_MAIN();
