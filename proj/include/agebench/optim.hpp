#pragma once

#include <functional>
#include <vector>

namespace agebench::optim {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/**
 * Deterministic Nelder-Mead simplex minimizer.
 * The initial simplex is x0 plus one vertex per coordinate offset by `step`.
 */
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, double step = 0.1,
                             int max_iter = 2000, double ftol = 1e-10);

/// Golden-section minimum of a unimodal f on [lo, hi].
double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double tol = 1e-10, int max_iter = 200);

}  // namespace agebench::optim
