#include "agebench/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace agebench::kernels {

namespace {

inline void matmul_row(const double* a, const double* b, double* c,
                       std::size_t i, std::size_t k, std::size_t n) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
        const double av = ai[l];
        const double* bl = b + l * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c,
                          std::size_t i, std::size_t k, std::size_t n) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double s = 0.0;
        for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
        ci[j] = s;
    }
}

inline void matmul_tn_row(const double* a, const double* b, double* c,
                          std::size_t i, std::size_t m, std::size_t k, std::size_t n) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
        const double av = a[l * m + i];
        const double* bl = b + l * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
}

}  // namespace

void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void matmul_omp(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        matmul_row(a, b, c, static_cast<std::size_t>(i), k, n);
#else
    matmul_serial(a, b, c, m, k, n);
#endif
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    if (m * k * n >= parallel_threshold_flops)
        matmul_omp(a, b, c, m, k, n);
    else
        matmul_serial(a, b, c, m, k, n);
}

void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) matmul_nt_row(a, b, c, i, k, n);
}

void matmul_nt_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        matmul_nt_row(a, b, c, static_cast<std::size_t>(i), k, n);
#else
    matmul_nt_serial(a, b, c, m, k, n);
#endif
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    if (m * k * n >= parallel_threshold_flops)
        matmul_nt_omp(a, b, c, m, k, n);
    else
        matmul_nt_serial(a, b, c, m, k, n);
}

void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) matmul_tn_row(a, b, c, i, m, k, n);
}

void matmul_tn_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        matmul_tn_row(a, b, c, static_cast<std::size_t>(i), m, k, n);
#else
    matmul_tn_serial(a, b, c, m, k, n);
#endif
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    if (m * k * n >= parallel_threshold_flops)
        matmul_tn_omp(a, b, c, m, k, n);
    else
        matmul_tn_serial(a, b, c, m, k, n);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        fn(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace agebench::kernels
