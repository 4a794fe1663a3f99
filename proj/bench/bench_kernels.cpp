// Serial reference vs OpenMP kernels at training-relevant shapes.
#include <benchmark/benchmark.h>

#include <vector>

#include "serl/kernels.hpp"
#include "serl/rng.hpp"

namespace {

using serl::kernels::Exec;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    serl::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void bm_matmul(benchmark::State& state, Exec exec) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto a = random_vec(n * n, 1);
    const auto b = random_vec(n * n, 2);
    std::vector<double> out(n * n);
    for (auto _ : state) {
        if (exec == Exec::Serial) {
            serl::kernels::matmul_serial(a.data(), false, b.data(), false, out.data(), n, n, n,
                                         false);
        } else {
            serl::kernels::matmul_parallel(a.data(), false, b.data(), false, out.data(), n, n, n,
                                           false);
        }
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
}

void bm_softmax(benchmark::State& state, Exec exec) {
    const std::size_t rows = static_cast<std::size_t>(state.range(0));
    const std::size_t cols = 16;
    const auto x = random_vec(rows * cols, 3);
    std::vector<double> out(rows * cols);
    for (auto _ : state) {
        if (exec == Exec::Serial) {
            serl::kernels::softmax_rows_serial(x.data(), out.data(), rows, cols);
        } else {
            serl::kernels::softmax_rows_parallel(x.data(), out.data(), rows, cols);
        }
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
}

void bm_pairwise_cosine(benchmark::State& state, Exec exec) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 8;
    const auto z = random_vec(n * d, 4);
    std::vector<double> out(n * n);
    for (auto _ : state) {
        if (exec == Exec::Serial) {
            serl::kernels::pairwise_cosine_serial(z.data(), n, d, out.data());
        } else {
            serl::kernels::pairwise_cosine_parallel(z.data(), n, d, out.data());
        }
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
}

void bm_spread_step(benchmark::State& state, Exec exec) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t c = 5, k = 10;
    std::vector<std::size_t> row_ptr(n + 1), col_idx;
    std::vector<double> weights;
    serl::Rng rng(5);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t e = 0; e < k; ++e) {
            col_idx.push_back(rng.uniform_int(n));
            weights.push_back(1.0 / k);
        }
        row_ptr[i + 1] = col_idx.size();
    }
    const auto y = random_vec(n * c, 6);
    std::vector<double> out(n * c);
    for (auto _ : state) {
        if (exec == Exec::Serial) {
            serl::kernels::spread_step_serial(row_ptr.data(), col_idx.data(), weights.data(), n,
                                              y.data(), c, out.data());
        } else {
            serl::kernels::spread_step_parallel(row_ptr.data(), col_idx.data(), weights.data(), n,
                                                y.data(), c, out.data());
        }
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
}

}  // namespace

BENCHMARK_CAPTURE(bm_matmul, serial, Exec::Serial)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(bm_matmul, parallel, Exec::Parallel)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(bm_softmax, serial, Exec::Serial)->Arg(1024)->Arg(8192);
BENCHMARK_CAPTURE(bm_softmax, parallel, Exec::Parallel)->Arg(1024)->Arg(8192);
BENCHMARK_CAPTURE(bm_pairwise_cosine, serial, Exec::Serial)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(bm_pairwise_cosine, parallel, Exec::Parallel)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(bm_spread_step, serial, Exec::Serial)->Arg(1024)->Arg(8192);
BENCHMARK_CAPTURE(bm_spread_step, parallel, Exec::Parallel)->Arg(1024)->Arg(8192);

BENCHMARK_MAIN();
