#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "agebench/timeseries.hpp"

namespace agebench::stat {

struct AdfResult {
    double statistic = 0.0;
    double critical_5pct = 0.0;
    bool reject_unit_root = false;
};

/// Augmented Dickey-Fuller test with constant, fixed lag order, 5% decision.
AdfResult adf_test(std::span<const double> series, std::size_t max_lag);

/// Sample autocorrelations for lags 0..max_lag.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

/// Partial autocorrelations for lags 1..max_lag (Durbin-Levinson).
std::vector<double> pacf(std::span<const double> series, std::size_t max_lag);

struct ArimaModel {
    int p = 0, d = 0, q = 0;
    bool with_constant = false;
    double c = 0.0;               // intercept of the ARMA recursion
    std::vector<double> phi;      // AR coefficients, length p
    std::vector<double> theta;    // MA coefficients, length q
    double sigma2 = 0.0;          // innovation variance
    double loglik = 0.0;
    double aic = 0.0;

    double mean() const;  // unconditional mean of the differenced series
    std::string to_json() const;
};

/// Exact Gaussian maximum likelihood for ARIMA(p,d,q), optionally with a
/// constant. Stationarity/invertibility are enforced through a partial
/// autocorrelation reparameterization.
ArimaModel arima_fit(std::span<const double> series, int p, int d, int q,
                     bool with_constant);

/// Hyndman-Khandakar style order selection: d by repeated ADF tests,
/// then a stepwise AIC search over (p, q) and the constant term.
ArimaModel auto_arima(std::span<const double> series);

/// Recursive forecasts, with differencing integrated back.
ts::ForecastResult arima_forecast(const ArimaModel& model, std::span<const double> history,
                                  std::size_t h);

struct HoltModel {
    double alpha_s = 0.5;  // level smoothing, [0,1]
    double beta_s = 0.5;   // trend smoothing, [0,1]
    double l = 0.0;        // level after the last observation
    double b = 0.0;        // trend after the last observation
    double l0 = 0.0, b0 = 0.0;
    double sse = 0.0;

    std::string to_json() const;
};

/// One-step SSE for given parameters; fills per-step forecasts when asked.
double holt_sse(std::span<const double> series, double alpha_s, double beta_s, double l0,
                double b0, std::vector<double>* one_step = nullptr);

/// Minimize the one-step SSE over (alpha, beta, l0, b0), box-constraining
/// the smoothing parameters to [0,1].
HoltModel holt_fit(std::span<const double> series);

ts::ForecastResult holt_forecast(const HoltModel& model, std::size_t h);

}  // namespace agebench::stat
