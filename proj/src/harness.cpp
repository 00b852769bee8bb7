#include "agebench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "agebench/covariates.hpp"
#include "agebench/kernels.hpp"
#include "agebench/neural.hpp"
#include "agebench/rng.hpp"
#include "agebench/stat_forecast.hpp"

namespace agebench::harness {

std::string model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Ekf: return "EKF";
        case ModelKind::Ukf: return "UKF";
        case ModelKind::UkfB: return "UKF-B";
        case ModelKind::Arima: return "ARIMA";
        case ModelKind::Holt: return "HOLT";
        case ModelKind::EnsembleNn: return "E-NN";
        case ModelKind::EnsembleElm: return "E-ELM";
        case ModelKind::Tft: return "TFT";
        case ModelKind::TftWithCov: return "TFT-wCov";
    }
    throw std::invalid_argument("model_name: unknown kind");
}

ModelKind model_from_name(const std::string& name) {
    for (ModelKind k : {ModelKind::Ekf, ModelKind::Ukf, ModelKind::UkfB, ModelKind::Arima,
                        ModelKind::Holt, ModelKind::EnsembleNn, ModelKind::EnsembleElm,
                        ModelKind::Tft, ModelKind::TftWithCov})
        if (model_name(k) == name) return k;
    throw std::invalid_argument("unknown model name: " + name);
}

// ---------------------------------------------------------------------------
// Forecaster wrappers
// ---------------------------------------------------------------------------

namespace {

using statespace::FilterKind;
using statespace::FilterState;
using statespace::Variant;

class FilterForecaster final : public Forecaster {
public:
    FilterForecaster(FilterKind kind, Variant variant, const ModelOptions& opt,
                     std::span<const double> initial_train)
        : kind_(kind), variant_(variant), opt_(opt) {
        const auto fit0 = statespace::fit_initial_params(initial_train);
        params_ = fit0.params;
        params_.r_init = opt.r_init;
    }

    void fit(std::span<const double> series) override {
        const double offset = variant_ == Variant::B ? opt_.r_init : 0.0;
        FilterState init = FilterState::initial(series[0] + offset, params_, opt_.p0);
        state_ = statespace::run_filter(series, init, opt_.noise, kind_, variant_,
                                        opt_.r_init)
                     .state;
    }

    std::vector<double> forecast(std::size_t h) override {
        return statespace::forecast_filter(state_, h, variant_, opt_.r_init).point;
    }

private:
    FilterKind kind_;
    Variant variant_;
    ModelOptions opt_;
    statespace::DegradationParams params_;
    FilterState state_;
};

class ArimaForecaster final : public Forecaster {
public:
    ArimaForecaster(std::span<const double> initial_train) {
        const auto selected = stat::auto_arima(initial_train);
        p_ = selected.p;
        d_ = selected.d;
        q_ = selected.q;
        with_constant_ = selected.with_constant;
    }

    void fit(std::span<const double> series) override {
        model_ = stat::arima_fit(series, p_, d_, q_, with_constant_);
        history_.assign(series.begin(), series.end());
    }

    std::vector<double> forecast(std::size_t h) override {
        return stat::arima_forecast(model_, history_, h).point;
    }

private:
    int p_ = 0, d_ = 0, q_ = 0;
    bool with_constant_ = false;
    stat::ArimaModel model_;
    std::vector<double> history_;
};

class HoltForecaster final : public Forecaster {
public:
    void fit(std::span<const double> series) override { model_ = stat::holt_fit(series); }
    std::vector<double> forecast(std::size_t h) override {
        return stat::holt_forecast(model_, h).point;
    }

private:
    stat::HoltModel model_;
};

class EnsembleWrapper final : public Forecaster {
public:
    EnsembleWrapper(nn::MemberKind kind, const ModelOptions& opt,
                    std::span<const double> initial_train, std::uint64_t seed)
        : kind_(kind), seed_(seed) {
        const std::size_t max_lag =
            std::max<std::size_t>(1, std::min<std::size_t>(5, initial_train.size() / 4));
        lag_spec_ = nn::select_lags(initial_train,
                                    std::min(max_lag, initial_train.size() / 3 - 1));
        config_.member_count = opt.ensemble_members;
        config_.l1_penalty = opt.elm_penalty;
        config_.hidden_count = nn::select_hidden_count(initial_train, lag_spec_, seed,
                                                       kind == nn::MemberKind::Elm,
                                                       opt.elm_penalty);
    }

    void fit(std::span<const double> series) override {
        ensemble_ = nn::train_ensemble(series, lag_spec_, kind_, config_, seed_);
        history_.assign(series.begin(), series.end());
    }

    std::vector<double> forecast(std::size_t h) override {
        return nn::ensemble_forecast(ensemble_, history_, h).point;
    }

private:
    nn::MemberKind kind_;
    std::uint64_t seed_;
    nn::LagSpec lag_spec_;
    nn::EnsembleConfig config_;
    nn::EnsembleForecaster ensemble_;
    std::vector<double> history_;
};

class TftForecaster final : public Forecaster {
public:
    TftForecaster(const ModelOptions& opt, const std::string& id, std::uint64_t seed)
        : opt_(opt), id_(id), seed_(seed) {}

    void fit(std::span<const double> series) override {
        tft::TftConfig cfg = opt_.tft;
        cfg.seed = seed_;
        cfg.covariate_count = opt_.covariates.empty() ? 0 : opt_.covariates[0].size();
        // Keep the window compatible with the available training prefix.
        if (series.size() <= cfg.input_window + cfg.tau_max)
            cfg.input_window =
                std::max<std::size_t>(2, series.size() > cfg.tau_max + 2
                                             ? series.size() - cfg.tau_max - 1
                                             : 2);
        tft::TrainTrace trace;
        trace.id = id_;
        trace.values.assign(series.begin(), series.end());
        if (cfg.covariate_count > 0)
            trace.covs.assign(opt_.covariates.begin(),
                              opt_.covariates.begin() + series.size());
        model_ = tft::train_tft({trace}, cfg);
        history_ = trace.values;
    }

    std::vector<double> forecast(std::size_t h) override {
        return tft::tft_forecast(model_, history_, opt_.covariates, id_, h).point;
    }

    bool refit_per_pseudo_obs() const override { return false; }

private:
    ModelOptions opt_;
    std::string id_;
    std::uint64_t seed_;
    tft::TftModel model_;
    std::vector<double> history_;
};

class BuiltinFactory final : public ForecasterFactory {
public:
    BuiltinFactory(ModelKind kind, ModelOptions options)
        : kind_(kind), options_(std::move(options)) {}

    std::unique_ptr<Forecaster> calibrate(std::span<const double> initial_train,
                                          std::uint64_t seed) const override {
        switch (kind_) {
            case ModelKind::Ekf:
                return std::make_unique<FilterForecaster>(FilterKind::Ekf, Variant::A,
                                                          options_, initial_train);
            case ModelKind::Ukf:
                return std::make_unique<FilterForecaster>(FilterKind::Ukf, Variant::A,
                                                          options_, initial_train);
            case ModelKind::UkfB:
                return std::make_unique<FilterForecaster>(FilterKind::Ukf, Variant::B,
                                                          options_, initial_train);
            case ModelKind::Arima:
                return std::make_unique<ArimaForecaster>(initial_train);
            case ModelKind::Holt:
                return std::make_unique<HoltForecaster>();
            case ModelKind::EnsembleNn:
                return std::make_unique<EnsembleWrapper>(nn::MemberKind::Mlp, options_,
                                                         initial_train, seed);
            case ModelKind::EnsembleElm:
                return std::make_unique<EnsembleWrapper>(nn::MemberKind::Elm, options_,
                                                         initial_train, seed);
            case ModelKind::Tft:
            case ModelKind::TftWithCov:
                return std::make_unique<TftForecaster>(options_, trace_id_, seed);
        }
        throw std::invalid_argument("calibrate: unknown model kind");
    }

    void set_trace_id(std::string id) { trace_id_ = std::move(id); }

private:
    ModelKind kind_;
    ModelOptions options_;
    std::string trace_id_ = "trace";
};

}  // namespace

std::unique_ptr<ForecasterFactory> make_factory(ModelKind kind, const ModelOptions& options) {
    return std::make_unique<BuiltinFactory>(kind, options);
}

// ---------------------------------------------------------------------------
// Walk-forward protocol
// ---------------------------------------------------------------------------

std::vector<double> walk_forward(const ForecasterFactory& factory,
                                 std::span<const double> values, std::size_t p,
                                 std::size_t n_steps, std::uint64_t seed, bool fast) {
    const std::size_t k = values.size();
    if (p < 1 || p >= k) throw std::invalid_argument("walk_forward: need 1 <= p < length");
    if (n_steps < 1) throw std::invalid_argument("walk_forward: n_steps must be >= 1");

    auto model = factory.calibrate(values.subspan(0, p), seed);
    const std::size_t target = k - p;
    std::vector<double> predictions;
    predictions.reserve(target);

    std::size_t p_cur = p;
    while (predictions.size() < target) {
        std::vector<double> train(values.begin(), values.begin() + p_cur);
        model->fit(train);
        if (model->refit_per_pseudo_obs() && !fast) {
            double f = model->forecast(1)[0];
            predictions.push_back(f);
            for (std::size_t j = 2; j <= n_steps && predictions.size() < target; ++j) {
                train.push_back(f);  // concatenate the pseudo-observation
                model->fit(train);   // re-fit model g
                f = model->forecast(1)[0];
                predictions.push_back(f);
            }
        } else {
            const std::size_t want = std::min(n_steps, target - predictions.size());
            const auto block = model->forecast(want);
            predictions.insert(predictions.end(), block.begin(), block.end());
        }
        p_cur += n_steps;
        if (p_cur > k) p_cur = k;
    }
    predictions.resize(target);
    return predictions;
}

// ---------------------------------------------------------------------------
// Benchmark grid
// ---------------------------------------------------------------------------

void BenchmarkConfig::validate() const {
    if (traces.empty()) throw std::invalid_argument("benchmark config: no traces");
    if (models.empty()) throw std::invalid_argument("benchmark config: no models");
    if (horizons.empty()) throw std::invalid_argument("benchmark config: no horizons");
    if (train_fractions.empty())
        throw std::invalid_argument("benchmark config: no train fractions");
    if (seeds.empty()) throw std::invalid_argument("benchmark config: no seeds");
    for (double f : train_fractions)
        if (f <= 0.0 || f >= 1.0)
            throw std::invalid_argument("benchmark config: fractions must be in (0,1)");
    tft.validate();
}

namespace {

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Covariate values per position for a trace of the given length, built from
// the piecewise-linear channels of the reference traces.
std::vector<std::vector<double>> covariates_for_length(
    const std::vector<std::vector<double>>& channels, std::size_t length) {
    std::vector<std::vector<double>> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double g = length > 1
                             ? double(i) / double(length - 1) * 99.0
                             : 0.0;
        const std::size_t gi = std::min<std::size_t>(99, std::size_t(std::llround(g)));
        out[i] = channels[gi];
    }
    return out;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
    config.validate();

    struct Cell {
        std::size_t trace_idx, model_idx, horizon_idx, fraction_idx, seed_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t t = 0; t < config.traces.size(); ++t)
        for (std::size_t m = 0; m < config.models.size(); ++m)
            for (std::size_t h = 0; h < config.horizons.size(); ++h)
                for (std::size_t f = 0; f < config.train_fractions.size(); ++f)
                    for (std::size_t s = 0; s < config.seeds.size(); ++s)
                        cells.push_back({t, m, h, f, s});

    BenchmarkReport report;
    report.config = config;
    report.config_hash = fnv1a_hex(config.to_json());
    report.rows.resize(cells.size());

    kernels::parallel_for(cells.size(), [&](std::size_t idx) {
        const Cell& cell = cells[idx];
        const auto& trace = config.traces[cell.trace_idx];
        const ModelKind kind = config.models[cell.model_idx];
        const std::size_t n = config.horizons[cell.horizon_idx];
        const double fraction = config.train_fractions[cell.fraction_idx];
        const std::uint64_t seed = config.seeds[cell.seed_idx];

        BenchmarkRow row;
        row.test = trace.id;
        row.model = model_name(kind);
        row.horizon = n;
        row.train_fraction = fraction;
        row.seed = seed;

        const auto start = std::chrono::steady_clock::now();
        try {
            const auto& values = trace.values;
            const std::size_t k = values.size();
            std::size_t p = static_cast<std::size_t>(std::floor(fraction * double(k)));
            p = std::clamp<std::size_t>(p, 1, k - 1);

            ModelOptions options;
            options.r_init = config.r_init;
            options.ensemble_members = config.ensemble_members;
            options.elm_penalty = config.elm_penalty;
            options.tft = config.tft;
            if (kind == ModelKind::TftWithCov) {
                std::vector<ts::DegradationTrace> refs;
                for (std::size_t j = 0; j < config.traces.size(); ++j) {
                    if (j == cell.trace_idx) continue;
                    ts::DegradationTrace ref;
                    ref.id = config.traces[j].id;
                    ref.times = config.traces[j].times;
                    ref.values = config.traces[j].values;
                    refs.push_back(std::move(ref));
                }
                if (refs.empty())
                    throw std::runtime_error("TFT-wCov needs at least one reference trace");
                options.covariates =
                    covariates_for_length(cov::covariate_channels(refs), k);
            }

            BuiltinFactory factory(kind, options);
            factory.set_trace_id(trace.id);
            const auto preds = walk_forward(factory, values, p, n, seed, config.fast);
            std::vector<double> actual(values.begin() + p, values.end());
            row.mape = ts::mape(actual, preds);
            if (config.store_predictions) {
                row.predictions = preds;
                row.actuals = actual;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        row.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.rows[idx] = std::move(row);
    });
    return report;
}

bool BenchmarkReport::any_failure() const {
    for (const auto& row : rows)
        if (!row.error.empty()) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Leave-one-out long-term protocol
// ---------------------------------------------------------------------------

std::vector<LooRow> loo_long_term(const std::vector<ts::DegradationTrace>& family,
                                  ModelKind model, double train_fraction,
                                  std::uint64_t seed, const tft::TftConfig& tft_config) {
    if (family.size() < 2) throw std::invalid_argument("loo_long_term: family too small");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("loo_long_term: fraction must be in (0,1)");
    if (model != ModelKind::Tft && model != ModelKind::TftWithCov &&
        model != ModelKind::EnsembleElm)
        throw std::invalid_argument("loo_long_term: unsupported model for this protocol");

    std::vector<LooRow> rows(family.size());
    kernels::parallel_for(family.size(), [&](std::size_t held) {
        const auto& target = family[held];
        LooRow row;
        row.held_out = target.id;
        row.train_fraction = train_fraction;
        row.seed = seed;
        try {
            const std::size_t k = target.size();
            std::size_t p =
                std::clamp<std::size_t>(std::size_t(std::floor(train_fraction * double(k))),
                                        1, k - 1);
            const std::size_t horizon = k - p;
            std::vector<double> prefix(target.values.begin(), target.values.begin() + p);

            if (model == ModelKind::EnsembleElm) {
                ModelOptions opt;
                BuiltinFactory factory(ModelKind::EnsembleElm, opt);
                auto f = factory.calibrate(prefix, seed);
                f->fit(prefix);
                row.forecast.point = f->forecast(horizon);
                row.forecast.origin_index = p - 1;
                row.forecast.horizon = horizon;
            } else {
                std::vector<ts::DegradationTrace> others;
                for (std::size_t j = 0; j < family.size(); ++j)
                    if (j != held) others.push_back(family[j]);

                tft::TftConfig cfg = tft_config;
                cfg.seed = seed;
                std::vector<std::vector<double>> channels;
                if (model == ModelKind::TftWithCov) {
                    channels = cov::covariate_channels(others);
                    cfg.covariate_count = others.size();
                } else {
                    cfg.covariate_count = 0;
                }

                std::size_t min_len = others.front().size();
                for (const auto& o : others) min_len = std::min(min_len, o.size());
                if (min_len <= cfg.tau_max + 2)
                    throw std::runtime_error("loo: training traces too short");
                if (min_len <= cfg.input_window + cfg.tau_max)
                    cfg.input_window = min_len - cfg.tau_max - 1;

                std::vector<tft::TrainTrace> train_set;
                for (const auto& o : others) {
                    tft::TrainTrace tr;
                    tr.id = o.id;
                    tr.values = o.values;
                    if (cfg.covariate_count > 0)
                        tr.covs = covariates_for_length(channels, o.size());
                    train_set.push_back(std::move(tr));
                }
                const tft::TftModel m = tft::train_tft(train_set, cfg);

                std::vector<std::vector<double>> target_covs;
                if (cfg.covariate_count > 0)
                    target_covs = covariates_for_length(channels, k);
                row.forecast =
                    tft::tft_forecast(m, prefix, target_covs, target.id, horizon);
            }
            std::vector<double> actual(target.values.begin() + p, target.values.end());
            row.mape = ts::mape(actual, row.forecast.point);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows[held] = std::move(row);
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Architecture sweep and RUL
// ---------------------------------------------------------------------------

SweepResult sweep_architectures(
    const std::vector<std::pair<std::string, tft::TftConfig>>& presets,
    const std::vector<ts::DegradationTrace>& traces, const std::vector<SweepCell>& cells) {
    if (presets.size() < 2) throw std::invalid_argument("sweep: need >= 2 presets");
    if (cells.empty()) throw std::invalid_argument("sweep: need >= 1 cell");

    SweepResult result;
    result.mape.assign(presets.size(), std::vector<double>(cells.size(), 1e300));

    struct Job {
        std::size_t preset, cell;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < presets.size(); ++p)
        for (std::size_t c = 0; c < cells.size(); ++c) jobs.push_back({p, c});

    kernels::parallel_for(jobs.size(), [&](std::size_t j) {
        const auto [pi, ci] = jobs[j];
        const SweepCell& cell = cells[ci];
        const ts::DegradationTrace* trace = nullptr;
        for (const auto& t : traces)
            if (t.id == cell.trace_id) trace = &t;
        if (!trace) return;  // unmatched cell: stays failed
        try {
            ModelOptions opt;
            opt.tft = presets[pi].second;
            BuiltinFactory factory(ModelKind::Tft, opt);
            factory.set_trace_id(trace->id);
            const std::size_t k = trace->size();
            const std::size_t p = std::clamp<std::size_t>(
                std::size_t(std::floor(cell.train_fraction * double(k))), 1, k - 1);
            const auto preds =
                walk_forward(factory, trace->values, p, cell.horizon, cell.seed);
            std::vector<double> actual(trace->values.begin() + p, trace->values.end());
            result.mape[pi][ci] = ts::mape(actual, preds);
        } catch (const std::exception&) {
            // preset fails this cell
        }
    });

    std::vector<int> wins(presets.size(), 0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double best = 1e300;
        std::size_t best_p = presets.size();
        for (std::size_t p = 0; p < presets.size(); ++p)
            if (result.mape[p][c] < best) {
                best = result.mape[p][c];
                best_p = p;
            }
        if (best_p < presets.size() && best < 1e300) ++wins[best_p];
    }
    std::size_t winner = 0;
    for (std::size_t p = 1; p < presets.size(); ++p) {
        const auto& a = presets[p].second;
        const auto& b = presets[winner].second;
        if (wins[p] > wins[winner] ||
            (wins[p] == wins[winner] &&
             (a.d_model < b.d_model ||
              (a.d_model == b.d_model && a.lstm_layers < b.lstm_layers))))
            winner = p;
    }
    result.winner = presets[winner].first;
    for (std::size_t p = 0; p < presets.size(); ++p)
        result.win_counts.emplace_back(presets[p].first, wins[p]);
    return result;
}

RulEstimate rul_from_threshold(const ts::ForecastResult& forecast, double threshold) {
    if (forecast.point.empty()) throw std::invalid_argument("rul: empty forecast");
    RulEstimate est;
    est.threshold = threshold;
    const std::vector<double>* curve = &forecast.point;
    const auto median = forecast.quantiles.find(0.5);
    if (median != forecast.quantiles.end()) curve = &median->second;
    for (std::size_t i = 0; i < curve->size(); ++i)
        if ((*curve)[i] >= threshold) {
            est.crossing_index = i;
            break;
        }
    return est;
}

// ---------------------------------------------------------------------------
// Config / report serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json tft_to_json(const tft::TftConfig& c) {
    return {{"d_model", c.d_model},
            {"lstm_layers", c.lstm_layers},
            {"heads", c.heads},
            {"quantiles", c.quantiles},
            {"input_window", c.input_window},
            {"tau_max", c.tau_max},
            {"dropout_rate", c.dropout_rate},
            {"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed}};
}

tft::TftConfig tft_from_json(const nlohmann::json& j) {
    tft::TftConfig c;
    if (j.contains("preset")) c = tft::preset(j.at("preset").get<std::string>().at(0));
    c.d_model = j.value("d_model", c.d_model);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
    c.heads = j.value("heads", c.heads);
    if (j.contains("quantiles")) c.quantiles = j.at("quantiles").get<std::vector<double>>();
    c.input_window = j.value("input_window", c.input_window);
    c.tau_max = j.value("tau_max", c.tau_max);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    return c;
}

}  // namespace

BenchmarkConfig BenchmarkConfig::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    BenchmarkConfig c;
    for (const auto& t : j.at("traces")) {
        TraceRef ref;
        if (t.is_string()) {
            ref.path = t.get<std::string>();
            const auto trace = ts::load_trace(ref.path);
            ref.id = trace.id;
            ref.times = trace.times;
            ref.values = trace.values;
        } else {
            ref.id = t.at("id").get<std::string>();
            ref.path = t.value("path", "");
            if (!ref.path.empty()) {
                auto trace = ts::load_trace(ref.path);
                ref.times = std::move(trace.times);
                ref.values = std::move(trace.values);
            } else {
                ref.times = t.at("times").get<std::vector<double>>();
                ref.values = t.at("values").get<std::vector<double>>();
            }
        }
        c.traces.push_back(std::move(ref));
    }
    for (const auto& m : j.at("models")) c.models.push_back(model_from_name(m));
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    if (j.contains("train_fractions"))
        c.train_fractions = j.at("train_fractions").get<std::vector<double>>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("tft")) c.tft = tft_from_json(j.at("tft"));
    c.ensemble_members = j.value("ensemble_members", c.ensemble_members);
    c.elm_penalty = j.value("elm_penalty", c.elm_penalty);
    c.r_init = j.value("r_init", c.r_init);
    c.fast = j.value("fast", c.fast);
    c.store_predictions = j.value("store_predictions", c.store_predictions);
    c.validate();
    return c;
}

std::string BenchmarkConfig::to_json() const {
    nlohmann::json j;
    j["traces"] = nlohmann::json::array();
    for (const auto& t : traces) {
        nlohmann::json tr{{"id", t.id}};
        if (!t.path.empty()) tr["path"] = t.path;
        tr["times"] = t.times;
        tr["values"] = t.values;
        j["traces"].push_back(std::move(tr));
    }
    j["models"] = nlohmann::json::array();
    for (ModelKind m : models) j["models"].push_back(model_name(m));
    j["horizons"] = horizons;
    j["train_fractions"] = train_fractions;
    j["seeds"] = seeds;
    j["tft"] = tft_to_json(tft);
    j["ensemble_members"] = ensemble_members;
    j["elm_penalty"] = elm_penalty;
    j["r_init"] = r_init;
    j["fast"] = fast;
    j["store_predictions"] = store_predictions;
    return j.dump();
}

std::string BenchmarkReport::to_json(bool include_runtime) const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["config"] = nlohmann::json::parse(config.to_json());
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json r{{"test", row.test},
                         {"model", row.model},
                         {"horizon", row.horizon},
                         {"train_fraction", row.train_fraction},
                         {"seed", row.seed},
                         {"mape", row.mape}};
        if (include_runtime) r["runtime_seconds"] = row.runtime_seconds;
        if (!row.error.empty()) r["error"] = row.error;
        if (!row.predictions.empty()) {
            r["predictions"] = row.predictions;
            r["actuals"] = row.actuals;
        }
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2);
}

std::string BenchmarkReport::to_csv() const {
    std::string out = "test,model,horizon,train_fraction,seed,mape,runtime_seconds,error\n";
    for (const auto& row : rows) {
        out += row.test + ',' + row.model + ',' + std::to_string(row.horizon) + ',' +
               ts::format_double(row.train_fraction) + ',' + std::to_string(row.seed) + ',' +
               (row.error.empty() ? ts::format_double(row.mape) : "") + ',' +
               ts::format_double(row.runtime_seconds) + ',' + row.error + '\n';
    }
    return out;
}

}  // namespace agebench::harness
