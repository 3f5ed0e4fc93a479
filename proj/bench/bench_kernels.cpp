// Serial reference vs OpenMP kernels. Thread count follows IPRIOR_THREADS.

#include "iprior/kernels.hpp"
#include "iprior/metric.hpp"
#include "iprior/parallel.hpp"

#include <benchmark/benchmark.h>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace iprior;

namespace {

Matrix points(Index n, Index d) {
    std::mt19937_64 g(42);
    std::normal_distribution<double> z;
    Matrix m(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j)
            m(i, j) = z(g);
    return m;
}

Matrix symmetric(Index n) {
    const Matrix a = points(n, n);
    return (a + a.transpose()) / 2;
}

void distance_parallel(benchmark::State &s) {
    const Matrix x = points(s.range(0), 10);
    for (auto _ : s)
        benchmark::DoNotOptimize(self_distance(x));
}

void distance_serial(benchmark::State &s) {
    const Matrix x = points(s.range(0), 10);
    for (auto _ : s)
        benchmark::DoNotOptimize(serial::self_distance(x));
}

template <bool Parallel>
void fbm_fill(benchmark::State &s) {
    const Index n = s.range(0);
    const Matrix d = serial::self_distance(points(n, 3));
    Matrix out(n, n);
    auto entry = [&](Index i, Index j) { return std::pow(d(i, j), 1.3); };
    for (auto _ : s) {
        if constexpr (Parallel)
            parallel::fill_symmetric(out, entry);
        else
            parallel::serial::fill_symmetric(out, entry);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void hadamard(benchmark::State &s) {
    const Matrix b = symmetric(s.range(0));
    Matrix out = symmetric(s.range(0));
    for (auto _ : s) {
        if constexpr (Parallel)
            parallel::hadamard_inplace(out, b);
        else
            parallel::serial::hadamard_inplace(out, b);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void rotate(benchmark::State &s) {
    const Matrix a = symmetric(s.range(0));
    const Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric(s.range(0)));
    for (auto _ : s) {
        if constexpr (Parallel)
            benchmark::DoNotOptimize(parallel::rotate(es.eigenvectors(), a));
        else
            benchmark::DoNotOptimize(parallel::serial::rotate(es.eigenvectors(), a));
    }
}

void gram_fbm(benchmark::State &s) {
    const auto col = CovariateColumn::real("x", points(s.range(0), 3));
    for (auto _ : s)
        benchmark::DoNotOptimize(gram(KernelSpec::fbm(0.65), col).gram.data());
}

} // namespace

BENCHMARK(distance_serial)->Arg(200)->Arg(800);
BENCHMARK(distance_parallel)->Arg(200)->Arg(800);
BENCHMARK(fbm_fill<false>)->Arg(200)->Arg(800);
BENCHMARK(fbm_fill<true>)->Arg(200)->Arg(800);
BENCHMARK(hadamard<false>)->Arg(400)->Arg(1600);
BENCHMARK(hadamard<true>)->Arg(400)->Arg(1600);
BENCHMARK(rotate<false>)->Arg(200);
BENCHMARK(rotate<true>)->Arg(200);
BENCHMARK(gram_fbm)->Arg(400);

BENCHMARK_MAIN();
