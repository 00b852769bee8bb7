#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agebench/statespace.hpp"
#include "agebench/tft.hpp"
#include "agebench/timeseries.hpp"

namespace agebench::harness {

enum class ModelKind {
    Ekf,
    Ukf,
    UkfB,  // alternative state-transition law (absolute-resistance form)
    Arima,
    Holt,
    EnsembleNn,
    EnsembleElm,
    Tft,
    TftWithCov,
};

std::string model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);

/**
 * One-step/multi-step forecaster behind the walk-forward protocol.
 * fit() re-estimates parameters on the given series; models whose fit is a
 * full training run (the TFT) opt out of per-pseudo-observation refits and
 * produce multi-step forecasts directly.
 */
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual void fit(std::span<const double> series) = 0;
    virtual std::vector<double> forecast(std::size_t h) = 0;
    virtual bool refit_per_pseudo_obs() const { return true; }
};

class ForecasterFactory {
public:
    virtual ~ForecasterFactory() = default;
    /// Hyperparameter selection happens here, on the initial training window.
    virtual std::unique_ptr<Forecaster> calibrate(std::span<const double> initial_train,
                                                  std::uint64_t seed) const = 0;
};

struct ModelOptions {
    statespace::NoiseConfig noise;
    std::array<double, 3> p0{1e-4, 1e-4, 1e-4};
    double r_init = 0.1;  // variant-B pristine resistance
    std::size_t ensemble_members = 20;
    double elm_penalty = 1e-3;
    tft::TftConfig tft;
    // Full-length covariate values per position for the evaluated trace
    // (TFT-wCov only; one inner vector per covariate channel grid row).
    std::vector<std::vector<double>> covariates;
    bool fast = false;  // reuse fitted parameters within a block
};

std::unique_ptr<ForecasterFactory> make_factory(ModelKind kind, const ModelOptions& options);

/// The short-term iterative protocol: fit on the true prefix, produce N
/// forecasts (refitting after each concatenated pseudo-observation), then
/// advance the prefix by N and repeat. The final block is truncated.
std::vector<double> walk_forward(const ForecasterFactory& factory,
                                 std::span<const double> values, std::size_t p,
                                 std::size_t n_steps, std::uint64_t seed,
                                 bool fast = false);

struct BenchmarkConfig {
    struct TraceRef {
        std::string id;
        std::string path;  // empty when values are inline
        std::vector<double> times;
        std::vector<double> values;
    };
    std::vector<TraceRef> traces;
    std::vector<ModelKind> models;
    std::vector<std::size_t> horizons{1, 2, 4};
    std::vector<double> train_fractions{0.33};
    std::vector<std::uint64_t> seeds{1};
    tft::TftConfig tft;
    std::size_t ensemble_members = 20;
    double elm_penalty = 1e-3;
    double r_init = 0.1;
    bool fast = false;
    bool store_predictions = false;

    void validate() const;
    static BenchmarkConfig from_json(const std::string& text);
    std::string to_json() const;
};

struct BenchmarkRow {
    std::string test;
    std::string model;
    std::size_t horizon = 0;
    double train_fraction = 0.0;
    std::uint64_t seed = 0;
    double mape = 0.0;
    double runtime_seconds = 0.0;
    std::string error;  // empty on success
    std::vector<double> predictions;  // when store_predictions
    std::vector<double> actuals;
};

struct BenchmarkReport {
    BenchmarkConfig config;
    std::vector<BenchmarkRow> rows;
    std::string config_hash;

    bool any_failure() const;
    std::string to_json(bool include_runtime = true) const;
    std::string to_csv() const;
};

/// Run every (trace, model, horizon, fraction, seed) cell; per-cell failures
/// are recorded as rows with an error field, never aborting the run.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

struct LooRow {
    std::string held_out;
    double train_fraction = 0.0;
    std::uint64_t seed = 0;
    double mape = 0.0;
    std::string error;
    ts::ForecastResult forecast;
};

/// Long-term leave-one-out protocol: the TFT variants train on the other
/// family traces; the ensemble baseline trains on the held-out prefix.
/// Horizon is everything from the fraction point to the end of the trace.
std::vector<LooRow> loo_long_term(const std::vector<ts::DegradationTrace>& family,
                                  ModelKind model, double train_fraction,
                                  std::uint64_t seed, const tft::TftConfig& tft_config);

struct SweepCell {
    std::string trace_id;
    std::size_t horizon = 1;
    double train_fraction = 0.33;
    std::uint64_t seed = 1;
};

struct SweepResult {
    std::string winner;
    std::vector<std::pair<std::string, int>> win_counts;
    std::vector<std::vector<double>> mape;  // preset x cell
};

/// Architecture selection by win count; ties break toward the smaller
/// hidden size, then fewer LSTM layers.
SweepResult sweep_architectures(
    const std::vector<std::pair<std::string, tft::TftConfig>>& presets,
    const std::vector<ts::DegradationTrace>& traces, const std::vector<SweepCell>& cells);

struct RulEstimate {
    std::optional<std::size_t> crossing_index;
    double threshold = 0.05;
};

/// First forecast step at or above the failure threshold (median band when
/// quantiles are present, point forecast otherwise).
RulEstimate rul_from_threshold(const ts::ForecastResult& forecast, double threshold = 0.05);

}  // namespace agebench::harness
