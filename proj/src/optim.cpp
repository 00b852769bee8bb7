#include "agebench/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agebench::optim {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, double step, int max_iter,
                             double ftol) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i)
        simplex[i + 1][i] += (x0[i] != 0.0 ? step * std::abs(x0[i]) : step);

    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fx[i] = f(simplex[i]);

    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    NelderMeadResult result;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        std::vector<std::size_t> order(n + 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        {
            std::vector<std::vector<double>> s2(n + 1);
            std::vector<double> f2(n + 1);
            for (std::size_t i = 0; i <= n; ++i) {
                s2[i] = simplex[order[i]];
                f2[i] = fx[order[i]];
            }
            simplex.swap(s2);
            fx.swap(f2);
        }

        if (std::abs(fx[n] - fx[0]) <= ftol * (std::abs(fx[0]) + std::abs(fx[n]) + 1e-300)) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / double(n);

        auto blend = [&](double coeff) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = centroid[j] + coeff * (centroid[j] - simplex[n][j]);
            return x;
        };

        std::vector<double> xr = blend(alpha);
        const double fr = f(xr);
        if (fr < fx[0]) {
            std::vector<double> xe = blend(gamma);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[n] = std::move(xe);
                fx[n] = fe;
            } else {
                simplex[n] = std::move(xr);
                fx[n] = fr;
            }
        } else if (fr < fx[n - 1]) {
            simplex[n] = std::move(xr);
            fx[n] = fr;
        } else {
            std::vector<double> xc = blend(fr < fx[n] ? rho : -rho);
            const double fc = f(xc);
            if (fc < std::min(fr, fx[n])) {
                simplex[n] = std::move(xc);
                fx[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[0][j] + sigma * (simplex[i][j] - simplex[0][j]);
                    fx[i] = f(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fx[i] < fx[best]) best = i;
    result.x = simplex[best];
    result.fx = fx[best];
    result.iterations = iter;
    return result;
}

double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double tol, int max_iter) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

}  // namespace agebench::optim
