#pragma once

#include <cstddef>
#include <functional>

namespace agebench::kernels {

// Dense row-major kernels. Every kernel has a plain serial reference and an
// OpenMP variant that splits work over output rows; each output element is
// accumulated by exactly one thread in a fixed order, so serial and parallel
// results are bit-identical. The dispatching entry points fall back to the
// serial path below `parallel_threshold_flops`.

inline constexpr std::size_t parallel_threshold_flops = 64 * 1024;

// C[m x n] = A[m x k] * B[k x n]
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_omp(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n);
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// C[m x n] = A[m x k] * B[n x k]^T
void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void matmul_nt_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

// C[m x n] = A[k x m]^T * B[k x n]
void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void matmul_tn_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

/**
 * Runs fn(i) for i in [0, n). Iterations must be independent; results keyed
 * by i stay deterministic regardless of thread count. Used for benchmark
 * cells, ensemble members and pairwise distance matrices.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

int max_threads();

}  // namespace agebench::kernels
