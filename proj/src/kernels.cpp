#include "serl/kernels.hpp"

#include <atomic>
#include <cmath>
#include <vector>

namespace serl::kernels {

namespace {

std::atomic<Exec> g_exec{
#ifdef _OPENMP
    Exec::Parallel
#else
    Exec::Serial
#endif
};

// below this many output elements the parallel variants fall back to a
// single thread; results are identical either way
constexpr std::size_t kGrain = 4096;

inline double cell(const double* a, bool trans, std::size_t i, std::size_t j,
                   std::size_t rows, std::size_t cols) {
    // logical (i, j) of a rows x cols matrix, stored transposed when trans
    (void)rows;
    return trans ? a[j * rows + i] : a[i * cols + j];
}

inline void matmul_row(const double* a, bool trans_a, const double* b, bool trans_b, double* out,
                       std::size_t i, std::size_t k, std::size_t n, std::size_t m,
                       bool accumulate) {
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            acc += cell(a, trans_a, i, p, m, k) * cell(b, trans_b, p, j, k, n);
        }
        if (accumulate) {
            out[i * n + j] += acc;
        } else {
            out[i * n + j] = acc;
        }
    }
}

inline void softmax_row(const double* x, double* out, std::size_t i, std::size_t cols) {
    const double* row = x + i * cols;
    double* o = out + i * cols;
    double mx = row[0];
    for (std::size_t j = 1; j < cols; ++j) {
        if (row[j] > mx) mx = row[j];
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        o[j] = std::exp(row[j] - mx);
        sum += o[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < cols; ++j) o[j] *= inv;
}

inline void cosine_row(const double* z, const double* inv_norm, std::size_t i, std::size_t n,
                       std::size_t d, double* out) {
    const double* zi = z + i * d;
    for (std::size_t j = 0; j < n; ++j) {
        const double* zj = z + j * d;
        double dot = 0.0;
        for (std::size_t p = 0; p < d; ++p) dot += zi[p] * zj[p];
        out[i * n + j] = dot * inv_norm[i] * inv_norm[j];
    }
}

inline void spread_row(const std::size_t* row_ptr, const std::size_t* col_idx, const double* w,
                       std::size_t i, const double* y, std::size_t c, double* out) {
    double* o = out + i * c;
    for (std::size_t p = 0; p < c; ++p) o[p] = 0.0;
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
        const double* yr = y + col_idx[e] * c;
        const double we = w[e];
        for (std::size_t p = 0; p < c; ++p) o[p] += we * yr[p];
    }
}

}  // namespace

Exec execution() { return g_exec.load(std::memory_order_relaxed); }
void set_execution(Exec mode) { g_exec.store(mode, std::memory_order_relaxed); }

void matmul_serial(const double* a, bool trans_a, const double* b, bool trans_b, double* out,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        matmul_row(a, trans_a, b, trans_b, out, i, k, n, m, accumulate);
    }
}

void matmul_parallel(const double* a, bool trans_a, const double* b, bool trans_b, double* out,
                     std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * n >= kGrain)
    for (long i = 0; i < rows; ++i) {
        matmul_row(a, trans_a, b, trans_b, out, static_cast<std::size_t>(i), k, n, m, accumulate);
    }
}

void matmul(const double* a, bool trans_a, const double* b, bool trans_b, double* out,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (execution() == Exec::Parallel) {
        matmul_parallel(a, trans_a, b, trans_b, out, m, k, n, accumulate);
    } else {
        matmul_serial(a, trans_a, b, trans_b, out, m, k, n, accumulate);
    }
}

void softmax_rows_serial(const double* x, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) softmax_row(x, out, i, cols);
}

void softmax_rows_parallel(const double* x, double* out, std::size_t rows, std::size_t cols) {
    const long r = static_cast<long>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kGrain)
    for (long i = 0; i < r; ++i) softmax_row(x, out, static_cast<std::size_t>(i), cols);
}

void softmax_rows(const double* x, double* out, std::size_t rows, std::size_t cols) {
    if (execution() == Exec::Parallel) {
        softmax_rows_parallel(x, out, rows, cols);
    } else {
        softmax_rows_serial(x, out, rows, cols);
    }
}

namespace {
void cosine_norms(const double* z, std::size_t n, std::size_t d, double* inv_norm) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t p = 0; p < d; ++p) s += z[i * d + p] * z[i * d + p];
        const double nrm = std::sqrt(s);
        inv_norm[i] = nrm > 0.0 ? 1.0 / nrm : 0.0;
    }
}
}  // namespace

void pairwise_cosine_serial(const double* z, std::size_t n, std::size_t d, double* out) {
    std::vector<double> inv_norm(n);
    cosine_norms(z, n, d, inv_norm.data());
    for (std::size_t i = 0; i < n; ++i) cosine_row(z, inv_norm.data(), i, n, d, out);
}

void pairwise_cosine_parallel(const double* z, std::size_t n, std::size_t d, double* out) {
    std::vector<double> inv_norm(n);
    cosine_norms(z, n, d, inv_norm.data());
    const long rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * n >= kGrain)
    for (long i = 0; i < rows; ++i) {
        cosine_row(z, inv_norm.data(), static_cast<std::size_t>(i), n, d, out);
    }
}

void pairwise_cosine(const double* z, std::size_t n, std::size_t d, double* out) {
    if (execution() == Exec::Parallel) {
        pairwise_cosine_parallel(z, n, d, out);
    } else {
        pairwise_cosine_serial(z, n, d, out);
    }
}

void spread_step_serial(const std::size_t* row_ptr, const std::size_t* col_idx, const double* w,
                        std::size_t n, const double* y, std::size_t c, double* out) {
    for (std::size_t i = 0; i < n; ++i) spread_row(row_ptr, col_idx, w, i, y, c, out);
}

void spread_step_parallel(const std::size_t* row_ptr, const std::size_t* col_idx, const double* w,
                          std::size_t n, const double* y, std::size_t c, double* out) {
    const long rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * c >= kGrain)
    for (long i = 0; i < rows; ++i) {
        spread_row(row_ptr, col_idx, w, static_cast<std::size_t>(i), y, c, out);
    }
}

void spread_step(const std::size_t* row_ptr, const std::size_t* col_idx, const double* w,
                 std::size_t n, const double* y, std::size_t c, double* out) {
    if (execution() == Exec::Parallel) {
        spread_step_parallel(row_ptr, col_idx, w, n, y, c, out);
    } else {
        spread_step_serial(row_ptr, col_idx, w, n, y, c, out);
    }
}

}  // namespace serl::kernels
