#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agebench/kernels.hpp"

#include <atomic>
#include <vector>

#include "agebench/rng.hpp"

using namespace agebench;

namespace {

std::vector<double> random_mat(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> m(n);
    for (auto& v : m) v = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("omp matmul matches the serial reference bit for bit") {
    for (std::size_t n : {std::size_t{3}, std::size_t{17}, std::size_t{64}}) {
        const auto a = random_mat(n * n, 1 + n);
        const auto b = random_mat(n * n, 2 + n);
        std::vector<double> c1(n * n), c2(n * n);
        kernels::matmul_serial(a.data(), b.data(), c1.data(), n, n, n);
        kernels::matmul_omp(a.data(), b.data(), c2.data(), n, n, n);
        CHECK(c1 == c2);

        kernels::matmul_nt_serial(a.data(), b.data(), c1.data(), n, n, n);
        kernels::matmul_nt_omp(a.data(), b.data(), c2.data(), n, n, n);
        CHECK(c1 == c2);

        kernels::matmul_tn_serial(a.data(), b.data(), c1.data(), n, n, n);
        kernels::matmul_tn_omp(a.data(), b.data(), c2.data(), n, n, n);
        CHECK(c1 == c2);
    }
}

TEST_CASE("matmul variants agree with the plain form") {
    const std::size_t m = 4, k = 5, n = 3;
    const auto a = random_mat(m * k, 11);
    const auto b = random_mat(k * n, 12);
    std::vector<double> c(m * n), c2(m * n);
    kernels::matmul_serial(a.data(), b.data(), c.data(), m, k, n);

    // b_t[n x k] = b^T, then a * (b_t)^T must equal a * b.
    std::vector<double> bt(n * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + i] = b[i * n + j];
    kernels::matmul_nt_serial(a.data(), bt.data(), c2.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(c2[i]));

    // a_t[k x m] = a^T, then (a_t)^T * b must equal a * b.
    std::vector<double> at(k * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) at[j * m + i] = a[i * k + j];
    kernels::matmul_tn_serial(at.data(), b.data(), c2.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(c2[i]));
}

TEST_CASE("parallel_for covers every index exactly once") {
    constexpr std::size_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    kernels::parallel_for(n, [&](std::size_t i) { hits[i]++; });
    for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
}
