#pragma once

#include <cstddef>

namespace serl::kernels {

// Dense inner loops used by the autodiff ops, the neighbor graph and the
// label spreading iteration. Every kernel has a serial reference and an
// OpenMP variant; the parallel variants assign each output element to
// exactly one thread and keep inner reductions serial, so both variants
// produce bitwise-identical results for any thread count.
enum class Exec { Serial, Parallel };

Exec execution();
void set_execution(Exec mode);

// out(m x n) = (or +=) opA(a) * opB(b), with opA(a): m x k and opB(b): k x n.
// trans_a means `a` is stored k x m, trans_b means `b` is stored n x k.
void matmul_serial(const double* a, bool trans_a, const double* b, bool trans_b, double* out,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_parallel(const double* a, bool trans_a, const double* b, bool trans_b, double* out,
                     std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul(const double* a, bool trans_a, const double* b, bool trans_b, double* out,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// Row-wise max-subtracted softmax.
void softmax_rows_serial(const double* x, double* out, std::size_t rows, std::size_t cols);
void softmax_rows_parallel(const double* x, double* out, std::size_t rows, std::size_t cols);
void softmax_rows(const double* x, double* out, std::size_t rows, std::size_t cols);

// out(n x n), out[i,j] = cos(z_i, z_j); zero-norm rows yield 0.
void pairwise_cosine_serial(const double* z, std::size_t n, std::size_t d, double* out);
void pairwise_cosine_parallel(const double* z, std::size_t n, std::size_t d, double* out);
void pairwise_cosine(const double* z, std::size_t n, std::size_t d, double* out);

// One label-spreading step over a CSR affinity matrix: out = S * y,
// y and out are n x c row-major.
void spread_step_serial(const std::size_t* row_ptr, const std::size_t* col_idx, const double* w,
                        std::size_t n, const double* y, std::size_t c, double* out);
void spread_step_parallel(const std::size_t* row_ptr, const std::size_t* col_idx, const double* w,
                          std::size_t n, const double* y, std::size_t c, double* out);
void spread_step(const std::size_t* row_ptr, const std::size_t* col_idx, const double* w,
                 std::size_t n, const double* y, std::size_t c, double* out);

}  // namespace serl::kernels
