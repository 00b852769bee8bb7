#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agebench/autograd.hpp"
#include "agebench/timeseries.hpp"

namespace agebench::tft {

struct TftConfig {
    std::size_t d_model = 16;
    std::size_t lstm_layers = 1;
    std::size_t heads = 2;  // m_H
    std::vector<double> quantiles{0.025, 0.5, 0.975};
    std::size_t input_window = 12;  // encoder length
    std::size_t tau_max = 4;        // decoder horizon
    double dropout_rate = 0.1;
    double learning_rate = 1e-3;
    std::size_t max_epochs = 60;
    std::size_t batch_size = 16;
    std::size_t covariate_count = 0;  // designed known-future channels
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t head_dim() const { return d_model / heads; }
};

/// Named presets from the evaluated hyperparameter grid
/// (hidden size, LSTM layers, attention heads).
TftConfig preset(char name);

/**
 * Parameter store for every TFT block plus normalization constants and the
 * static-identifier vocabulary. Immutable after training.
 */
struct TftModel {
    TftConfig config;
    std::map<std::string, ad::Tensor> params;
    std::vector<std::string> vocab;  // training trace ids for the static one-hot
    double norm_mean = 0.0;
    double norm_std = 1.0;

    const ad::Tensor& at(const std::string& name) const;

    std::string to_json() const;
    static TftModel from_json(const std::string& text);
};

struct AttentionReport {
    struct Step {
        std::size_t tau = 0;           // decoder step, 1-based
        std::vector<double> weights;   // over all attended positions
        std::size_t argmax = 0;        // encoder position with maximal weight
        double max_weight = 0.0;
    };
    std::vector<Step> steps;

    std::string to_json() const;
};

/// One training sample / inference input. Values are original scale;
/// covariates are aligned per position (encoder first, then decoder).
struct TftInput {
    std::vector<double> past_values;                 // length input_window
    std::vector<std::vector<double>> past_covs;      // input_window x covariate_count
    std::vector<std::vector<double>> future_covs;    // tau_max x covariate_count
    std::string static_id;
    std::size_t window_start = 0;  // absolute position of past_values[0]
};

struct TftOutput {
    std::map<double, std::vector<double>> quantile_forecasts;  // original scale
    AttentionReport attention;
};

/// Free-standing block primitives (also used by the gradient-check tests).
/// glu: sigma(g W4 + b4) elementwise* (g W5 + b5)
ad::Var glu(ad::Tape& tape, ad::Var gamma, ad::Var w4, ad::Var b4, ad::Var w5, ad::Var b5);

struct GrnVars {
    ad::Var w2, b2;           // input -> hidden
    ad::Var w3;               // context -> hidden (optional, invalid Var if absent)
    ad::Var w1, b1;           // hidden -> out
    ad::Var w4, b4, w5, b5;   // GLU on the out dimension
    ad::Var skip_w;           // input -> out projection when dims differ
    ad::Var ln_gamma, ln_beta;
};

/// grn: LayerNorm(skip(a) + GLU(W1 ELU(W2 a + W3 c + b2) + b1)) with learned
/// affine layer normalization. `c` may be invalid (treated as absent).
ad::Var grn(ad::Tape& tape, ad::Var a, ad::Var c, const GrnVars& w,
            const ad::Tensor* dropout_mask = nullptr);

/// Scaled dot-product attention; optional additive mask on the logits.
/// attn_out receives the softmax matrix when non-null.
ad::Var attention(ad::Tape& tape, ad::Var q, ad::Var k, ad::Var v,
                  const ad::Tensor* mask = nullptr, ad::Var* attn_out = nullptr);

/// Interpretable multi-head attention: head-specific queries/keys, one
/// shared value projection, averaged heads.
ad::Var interpretable_multihead(ad::Tape& tape, ad::Var q, ad::Var k, ad::Var v,
                                const std::vector<ad::Var>& wq,
                                const std::vector<ad::Var>& wk, ad::Var wv, ad::Var wh,
                                const ad::Tensor* mask = nullptr,
                                ad::Tensor* mean_attention = nullptr);

/// Pinball loss q (y - yhat)_+ + (1 - q) (yhat - y)_+.
double quantile_loss(double y, double y_hat, double q);

/// Fresh model with seeded initialization for the given trace vocabulary.
TftModel init_model(const TftConfig& config, const std::vector<std::string>& vocab,
                    std::uint64_t seed);

/// Full forward pass for one input; quantile outputs are denormalized.
TftOutput tft_forward(const TftModel& model, const TftInput& input);

struct TrainTrace {
    std::string id;
    std::vector<double> values;
    std::vector<std::vector<double>> covs;  // values.size() x covariate_count
};

struct TrainStats {
    std::vector<double> epoch_losses;
};

/// Sliding-window quantile training with Adam-style per-parameter scaling.
TftModel train_tft(const std::vector<TrainTrace>& traces, const TftConfig& config,
                   TrainStats* stats = nullptr);

/// Iterated multi-block forecast: tau_max steps at a time, median fed back.
/// `covs` must cover positions 0 .. history + h - 1 when the model uses
/// covariates.
ts::ForecastResult tft_forecast(const TftModel& model, const std::vector<double>& history,
                                const std::vector<std::vector<double>>& covs,
                                const std::string& id, std::size_t h);

/// Attention rows for one window (a forward pass without training).
AttentionReport extract_attention(const TftModel& model, const TftInput& input);

}  // namespace agebench::tft
