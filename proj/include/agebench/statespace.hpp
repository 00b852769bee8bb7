#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agebench/linalg.hpp"
#include "agebench/timeseries.hpp"

namespace agebench::statespace {

/// Which discrete state-transition law drives the filter.
enum class Variant {
    A,  // r' = r (1 + beta) + alpha beta          (delta-R dynamics)
    B,  // r' = r (1 + beta) - r_init beta          (absolute-R dynamics)
};

struct DegradationParams {
    double alpha = 0.0;   // ohms
    double beta = 0.0;    // per step
    double r_init = 0.0;  // ohms, used by variant B only
};

/**
 * Augmented filter state: x_hat = [r, alpha, beta], covariance P.
 * For variant A the tracked r is delta-R itself; for variant B the tracked r
 * is the absolute on-resistance and the measurement model subtracts r_init.
 */
struct FilterState {
    std::array<double, 3> x_hat{0.0, 0.0, 0.0};
    la::Mat p{3, 3};

    static FilterState initial(double r0, const DegradationParams& params,
                               const std::array<double, 3>& p0_diag);
};

struct UkfSpread {
    double a = 0.1;
    double b = 2.0;
    double kappa = 0.0;
};

struct NoiseConfig {
    double process_sigma = 0.002;     // w_k
    double measurement_sigma = 0.01;  // v_k
    UkfSpread ukf;

    void validate() const;
};

/// One application of the chosen state-transition law.
double model_step(double r, const DegradationParams& params, Variant variant);

struct FitResult {
    DegradationParams params;
    double residual_norm = 0.0;
};

/// Least-squares fit of alpha, beta in delta_R(t) = alpha (exp(beta t) - 1)
/// on the training window, with t the 0-based sample index.
FitResult fit_initial_params(const ts::DegradationTrace& train);
FitResult fit_initial_params(std::span<const double> values);

FilterState ekf_step(const FilterState& state, double z, const NoiseConfig& noise,
                     Variant variant = Variant::A, double r_init = 0.0);
FilterState ukf_step(const FilterState& state, double z, const NoiseConfig& noise,
                     Variant variant = Variant::A, double r_init = 0.0);

/// Sigma points per the unscented construction: x, x +/- columns of
/// sqrt((n + lambda) P). Row-major list of 2n+1 points.
std::vector<std::vector<double>> sigma_points(std::span<const double> mean, const la::Mat& p,
                                              double n_plus_lambda);

/// Multi-step forecast iterating the transition law with frozen alpha, beta.
ts::ForecastResult forecast_filter(const FilterState& state, std::size_t n,
                                   Variant variant = Variant::A, double r_init = 0.0);

enum class FilterKind { Ekf, Ukf };

struct FilterRun {
    FilterState state;                     // posterior after the last measurement
    std::vector<double> one_step_preds;    // prediction of z_i before seeing it, i >= 1
};

/// Run a filter across a measured delta-R series from the given initial state.
FilterRun run_filter(std::span<const double> measurements, const FilterState& init,
                     const NoiseConfig& noise, FilterKind kind,
                     Variant variant = Variant::A, double r_init = 0.0);

/// JSON: {process_sigma, measurement_sigma, ukf:{a,b,kappa}, x0:[...], p0:[...]}
struct FilterInit {
    NoiseConfig noise;
    std::array<double, 3> x0{0.0, 0.0, 0.0};
    std::array<double, 3> p0{1e-4, 1e-4, 1e-4};
    bool has_x0 = false;
};
FilterInit filter_init_from_json(const std::string& text);

}  // namespace agebench::statespace
