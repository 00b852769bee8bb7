#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agebench/linalg.hpp"
#include "agebench/timeseries.hpp"

namespace agebench::nn {

struct LagSpec {
    std::vector<std::size_t> lags;  // strictly increasing, >= 1
    bool difference_first = false;

    std::size_t max_lag() const { return lags.empty() ? 0 : lags.back(); }
    void validate() const;
};

/// Autoregressive lags chosen by partial autocorrelation: keep lags whose
/// |PACF| clears the 95% band, always including lag 1. Differencing is
/// enabled when an ADF test fails to reject a unit root.
LagSpec select_lags(std::span<const double> series, std::size_t max_lag);

/**
 * Shared single-hidden-layer core: sigmoid hidden units, linear output,
 * z-score normalization of the (optionally differenced) series.
 */
struct NetCore {
    LagSpec lag_spec;
    std::size_t hidden_count = 0;
    la::Mat w1;               // hidden x lags
    std::vector<double> b1;   // hidden
    std::vector<double> w2;   // hidden
    double b2 = 0.0;
    double norm_mean = 0.0;
    double norm_std = 1.0;

    /// One-step-ahead prediction from the tail of an original-scale history.
    double predict_next(std::span<const double> history) const;
};

struct MlpForecaster {
    NetCore net;
    double train_mse = 0.0;
};

struct ElmForecaster {
    NetCore net;
    double l1_penalty = 0.0;
};

/// Backprop-trained MLP; hidden count picked by five-fold CV over 2..20.
MlpForecaster train_mlp(std::span<const double> series, const LagSpec& lag_spec,
                        std::uint64_t seed);

/// Same trainer with a fixed hidden count (no cross-validation pass).
MlpForecaster train_mlp_fixed(std::span<const double> series, const LagSpec& lag_spec,
                              std::size_t hidden_count, std::uint64_t seed);

/// Five-fold cross-validated hidden-unit selection shared by both families.
std::size_t select_hidden_count(std::span<const double> series, const LagSpec& lag_spec,
                                std::uint64_t seed, bool elm, double l1_penalty);

/// Random frozen input layer; output layer by L1-penalized least squares
/// (coordinate descent). A zero penalty reduces to ordinary least squares.
ElmForecaster train_elm(std::span<const double> series, const LagSpec& lag_spec,
                        std::size_t hidden_count, double l1_penalty, std::uint64_t seed);

enum class MemberKind { Mlp, Elm };

struct EnsembleForecaster {
    MemberKind kind = MemberKind::Elm;
    std::vector<NetCore> members;  // 20 members sharing one lag spec

    void validate() const;
};

struct EnsembleConfig {
    std::size_t member_count = 20;
    double l1_penalty = 1e-3;     // ELM output-layer penalty
    std::size_t hidden_count = 0; // 0 = choose by CV
};

/// Train `member_count` members differing only in their seed.
EnsembleForecaster train_ensemble(std::span<const double> series, const LagSpec& lag_spec,
                                  MemberKind kind, const EnsembleConfig& config,
                                  std::uint64_t seed);

/// Per-member recursive forecasts combined by an elementwise median.
ts::ForecastResult ensemble_forecast(const EnsembleForecaster& ensemble,
                                     std::span<const double> history, std::size_t h);

/// Iterated one-step forecasting, feeding predictions back into the history.
ts::ForecastResult forecast_recursive(const NetCore& model, std::span<const double> history,
                                      std::size_t h);

double median_of(std::vector<double> v);

}  // namespace agebench::nn
