// Serial reference kernels against their OpenMP counterparts, and the FFT
// jump product against direct summation.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <random>
#include <vector>

#include "rainbow/harness.hpp"
#include "rainbow/jump_operator.hpp"
#include "rainbow/sparse.hpp"
#include "rainbow/spatial_operator.hpp"
#include "rainbow/tridiagonal.hpp"

using namespace rainbow;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

OperatorSet operators(std::size_t m) {
    const ParameterSet set = parameter_set(SetId::Set1);
    GridSpec spec;
    spec.m = m;
    spec.K = set.option.K;
    spec.S_max = set.s_max_put_on_min;
    return assemble(set.params, build_grid(spec));
}

void BM_CsrMatvecSerial(benchmark::State& state) {
    const CsrMatrix a = operators(static_cast<std::size_t>(state.range(0))).full_d();
    const auto in = random_vector(a.cols(), 1);
    std::vector<double> out(a.rows());
    for (auto _ : state) {
        kernels::csr_matvec_serial(a, in, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_CsrMatvecOpenMP(benchmark::State& state) {
    const CsrMatrix a = operators(static_cast<std::size_t>(state.range(0))).full_d();
    const auto in = random_vector(a.cols(), 1);
    std::vector<double> out(a.rows());
    for (auto _ : state) {
        kernels::csr_matvec(a, in, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void line_solve(benchmark::State& state, bool parallel) {
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const OperatorSet ops = operators(m);
    const TridiagonalLU lu(ops.axis_op2, 0.01);
    const LineLayout layout{m + 1, 1, m + 1};
    auto x = random_vector((m + 1) * (m + 1), 2);
    for (auto _ : state) {
        if (parallel) {
            kernels::solve_lines(lu, layout, x);
        } else {
            kernels::solve_lines_serial(lu, layout, x);
        }
        benchmark::DoNotOptimize(x.data());
    }
}

void BM_SolveLinesSerial(benchmark::State& state) { line_solve(state, false); }
void BM_SolveLinesOpenMP(benchmark::State& state) { line_solve(state, true); }

ToeplitzKernel kernel_for(std::size_t M) {
    const ParameterSet set = parameter_set(SetId::Set1);
    const double X = std::log(set.s_max_put_on_min);
    const LogAxis axis{M, 2.0 * X / static_cast<double>(M), X};
    return build_kernel(set.params, LogGrid{axis, axis});
}

void fft_product(benchmark::State& state, int threads) {
    const std::size_t M = static_cast<std::size_t>(state.range(0));
    const BlockToeplitzFft op(kernel_for(M), threads);
    const auto in = random_vector(M * M, 3);
    std::vector<double> out(M * M);
    for (auto _ : state) {
        op.apply(in, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.counters["threads"] = threads <= 0 ? omp_get_max_threads() : threads;
}

void BM_BlockToeplitzFftSerial(benchmark::State& state) { fft_product(state, 1); }
void BM_BlockToeplitzFftOpenMP(benchmark::State& state) { fft_product(state, 0); }

void BM_BlockToeplitzDirect(benchmark::State& state) {
    const std::size_t M = static_cast<std::size_t>(state.range(0));
    const ToeplitzKernel k = kernel_for(M);
    const auto in = random_vector(M * M, 3);
    for (auto _ : state) benchmark::DoNotOptimize(blocktoeplitz_matvec_direct(k, in));
}

void BM_JumpOperator(benchmark::State& state) {
    ProblemOptions opts;
    opts.jump.parallel = state.range(1) != 0;
    const Problem p = make_problem(parameter_set(SetId::Set1), PayoffKind::PutOnMin,
                                   static_cast<std::size_t>(state.range(0)), opts);
    std::vector<double> out(p.v0.size());
    for (auto _ : state) {
        p.jump->apply(p.v0, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_CsrMatvecSerial)->Arg(75)->Arg(150);
BENCHMARK(BM_CsrMatvecOpenMP)->Arg(75)->Arg(150);
BENCHMARK(BM_SolveLinesSerial)->Arg(75)->Arg(150);
BENCHMARK(BM_SolveLinesOpenMP)->Arg(75)->Arg(150);
BENCHMARK(BM_BlockToeplitzDirect)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockToeplitzFftSerial)->Arg(16)->Arg(32)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockToeplitzFftOpenMP)->Arg(16)->Arg(32)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JumpOperator)->Args({50, 0})->Args({50, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
