#include "agebench/tft.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "agebench/rng.hpp"

namespace agebench::tft {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void TftConfig::validate() const {
    if (d_model == 0 || heads == 0 || d_model % heads != 0)
        throw std::invalid_argument("tft config: d_model must be divisible by heads");
    if (lstm_layers == 0) throw std::invalid_argument("tft config: lstm_layers must be >= 1");
    if (input_window == 0 || tau_max == 0)
        throw std::invalid_argument("tft config: window and horizon must be >= 1");
    if (quantiles.empty()) throw std::invalid_argument("tft config: no quantiles");
    bool has_median = false;
    for (std::size_t i = 0; i < quantiles.size(); ++i) {
        if (quantiles[i] <= 0.0 || quantiles[i] >= 1.0)
            throw std::invalid_argument("tft config: quantiles must lie in (0,1)");
        if (i > 0 && quantiles[i] <= quantiles[i - 1])
            throw std::invalid_argument("tft config: quantiles must be strictly increasing");
        if (quantiles[i] == 0.5) has_median = true;
    }
    if (!has_median) throw std::invalid_argument("tft config: median quantile required");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("tft config: dropout_rate must be in [0,1)");
}

TftConfig preset(char name) {
    TftConfig c;
    switch (name) {
        case 'A': c.d_model = 128; c.lstm_layers = 4; c.heads = 4; break;
        case 'B': c.d_model = 128; c.lstm_layers = 8; c.heads = 4; break;
        case 'C': c.d_model = 128; c.lstm_layers = 4; c.heads = 2; break;
        case 'D': c.d_model = 256; c.lstm_layers = 4; c.heads = 4; break;
        case 'E': c.d_model = 256; c.lstm_layers = 8; c.heads = 4; break;
        case 'F': c.d_model = 256; c.lstm_layers = 4; c.heads = 2; break;
        case 'G': c.d_model = 64;  c.lstm_layers = 1; c.heads = 4; break;
        default: throw std::invalid_argument("tft preset: expected A..G");
    }
    return c;
}

const Tensor& TftModel::at(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("tft model: missing tensor " + name);
    return it->second;
}

double quantile_loss(double y, double y_hat, double q) {
    if (q <= 0.0 || q >= 1.0) throw std::invalid_argument("quantile_loss: q outside (0,1)");
    return q * std::max(0.0, y - y_hat) + (1.0 - q) * std::max(0.0, y_hat - y);
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

Var glu(Tape& tape, Var gamma, Var w4, Var b4, Var w5, Var b5) {
    Var gate = tape.sigmoid(tape.add_row(tape.matmul(gamma, w4), b4));
    Var lin = tape.add_row(tape.matmul(gamma, w5), b5);
    return tape.mul(gate, lin);
}

Var grn(Tape& tape, Var a, Var c, const GrnVars& w, const Tensor* dropout_mask) {
    Var eta2 = tape.matmul(a, w.w2);
    if (c.valid() && w.w3.valid()) eta2 = tape.add_row(eta2, tape.matmul(c, w.w3));
    eta2 = tape.elu(tape.add_row(eta2, w.b2));
    Var eta1 = tape.add_row(tape.matmul(eta2, w.w1), w.b1);
    if (dropout_mask) eta1 = tape.mul(eta1, tape.constant(*dropout_mask));
    Var gated = glu(tape, eta1, w.w4, w.b4, w.w5, w.b5);
    Var skip = w.skip_w.valid() ? tape.matmul(a, w.skip_w) : a;
    Var normed = tape.layernorm_rows(tape.add(skip, gated));
    return tape.add_row(tape.mul_row(normed, w.ln_gamma), w.ln_beta);
}

Var attention(Tape& tape, Var q, Var k, Var v, const Tensor* mask, Var* attn_out) {
    const std::size_t dk = tape.value(q).cols;
    Var scores = tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(double(dk)));
    Var weights = tape.softmax_rows(scores, mask);
    if (attn_out) *attn_out = weights;
    return tape.matmul(weights, v);
}

Var interpretable_multihead(Tape& tape, Var q, Var k, Var v, const std::vector<Var>& wq,
                            const std::vector<Var>& wk, Var wv, Var wh, const Tensor* mask,
                            Tensor* mean_attention) {
    const std::size_t heads = wq.size();
    if (heads == 0 || wk.size() != heads)
        throw std::invalid_argument("interpretable_multihead: head weights mismatch");
    Var shared_v = tape.matmul(v, wv);
    Var acc;
    Tensor attn_sum;
    for (std::size_t h = 0; h < heads; ++h) {
        Var attn_var;
        Var head = attention(tape, tape.matmul(q, wq[h]), tape.matmul(k, wk[h]), shared_v,
                             mask, &attn_var);
        acc = h == 0 ? head : tape.add(acc, head);
        if (mean_attention) {
            const Tensor& a = tape.value(attn_var);
            if (h == 0)
                attn_sum = a;
            else
                for (std::size_t i = 0; i < a.size(); ++i) attn_sum.data[i] += a.data[i];
        }
    }
    if (mean_attention) {
        for (double& x : attn_sum.data) x /= double(heads);
        *mean_attention = std::move(attn_sum);
    }
    return tape.matmul(tape.scale(acc, 1.0 / double(heads)), wh);
}

// ---------------------------------------------------------------------------
// Model initialization
// ---------------------------------------------------------------------------

namespace {

void init_tensor(Tensor& t, Rng& rng, double scale) {
    for (double& v : t.data) v = rng.uniform(-scale, scale);
}

void add_linear(std::map<std::string, Tensor>& p, const std::string& name, std::size_t in,
                std::size_t out, Rng& rng) {
    Tensor w(in, out);
    init_tensor(w, rng, 1.0 / std::sqrt(double(in)));
    p[name + "_w"] = std::move(w);
    p[name + "_b"] = Tensor(1, out);
}

// GRN weights: input -> hidden -> out with GLU gate, skip projection when
// input and output dims differ, learned layer-norm affine.
void add_grn(std::map<std::string, Tensor>& p, const std::string& prefix, std::size_t in,
             std::size_t hidden, std::size_t out, bool with_context, std::size_t d_context,
             Rng& rng) {
    auto mk = [&](const std::string& n, std::size_t r, std::size_t c, bool zero = false) {
        Tensor t(r, c);
        if (!zero) init_tensor(t, rng, 1.0 / std::sqrt(double(r)));
        p[prefix + n] = std::move(t);
    };
    mk("_w2", in, hidden);
    mk("_b2", 1, hidden, true);
    if (with_context) mk("_w3", d_context, hidden);
    mk("_w1", hidden, out);
    mk("_b1", 1, out, true);
    mk("_w4", out, out);
    mk("_b4", 1, out, true);
    mk("_w5", out, out);
    mk("_b5", 1, out, true);
    if (in != out) mk("_skip", in, out);
    Tensor gamma(1, out, 1.0);
    p[prefix + "_ln_g"] = std::move(gamma);
    p[prefix + "_ln_b"] = Tensor(1, out);
}

void add_glu_norm(std::map<std::string, Tensor>& p, const std::string& prefix, std::size_t d,
                  Rng& rng) {
    auto mk = [&](const std::string& n, std::size_t r, std::size_t c, bool zero = false) {
        Tensor t(r, c);
        if (!zero) init_tensor(t, rng, 1.0 / std::sqrt(double(r)));
        p[prefix + n] = std::move(t);
    };
    mk("_w4", d, d);
    mk("_b4", 1, d, true);
    mk("_w5", d, d);
    mk("_b5", 1, d, true);
    Tensor gamma(1, d, 1.0);
    p[prefix + "_ln_g"] = std::move(gamma);
    p[prefix + "_ln_b"] = Tensor(1, d);
}

std::vector<std::string> past_variable_names(const TftConfig& c) {
    std::vector<std::string> names{"value", "time"};
    for (std::size_t i = 0; i < c.covariate_count; ++i) names.push_back("cov" + std::to_string(i));
    return names;
}

std::vector<std::string> future_variable_names(const TftConfig& c) {
    std::vector<std::string> names{"time"};
    for (std::size_t i = 0; i < c.covariate_count; ++i) names.push_back("cov" + std::to_string(i));
    return names;
}

}  // namespace

TftModel init_model(const TftConfig& config, const std::vector<std::string>& vocab,
                    std::uint64_t seed) {
    config.validate();
    TftModel model;
    model.config = config;
    model.vocab = vocab;
    Rng rng(seed);
    auto& p = model.params;
    const std::size_t d = config.d_model;

    // Variable embeddings (scalar -> d) shared between encoder and decoder.
    for (const auto& name : past_variable_names(config)) add_linear(p, "emb_" + name, 1, d, rng);

    // Static one-hot embedding and the four context encoders.
    Tensor se(std::max<std::size_t>(vocab.size(), 1), d);
    init_tensor(se, rng, 1.0 / std::sqrt(double(d)));
    p["static_emb"] = std::move(se);
    for (const char* ctx : {"ctx_s", "ctx_c", "ctx_h", "ctx_e"})
        add_grn(p, ctx, d, d, d, false, d, rng);

    // Variable selection networks for past and future inputs.
    const std::size_t m_p = past_variable_names(config).size();
    const std::size_t m_f = future_variable_names(config).size();
    add_grn(p, "vsn_past_sel", m_p * d, d, m_p, true, d, rng);
    for (std::size_t j = 0; j < m_p; ++j)
        add_grn(p, "vsn_past_var" + std::to_string(j), d, d, d, false, d, rng);
    add_grn(p, "vsn_fut_sel", m_f * d, d, m_f, true, d, rng);
    for (std::size_t j = 0; j < m_f; ++j)
        add_grn(p, "vsn_fut_var" + std::to_string(j), d, d, d, false, d, rng);

    // LSTM encoder / decoder stacks.
    for (std::size_t l = 0; l < config.lstm_layers; ++l)
        for (const char* side : {"enc", "dec"})
            for (const char* gate : {"i", "f", "g", "o"}) {
                const std::string base =
                    std::string(side) + "_lstm" + std::to_string(l) + "_" + gate;
                Tensor wx(d, d), whh(d, d);
                init_tensor(wx, rng, 1.0 / std::sqrt(double(d)));
                init_tensor(whh, rng, 1.0 / std::sqrt(double(d)));
                p[base + "_wx"] = std::move(wx);
                p[base + "_wh"] = std::move(whh);
                p[base + "_b"] = Tensor(1, d);
            }

    add_glu_norm(p, "skip", d, rng);
    add_grn(p, "enrich", d, d, d, true, d, rng);

    const std::size_t da = config.head_dim();
    for (std::size_t h = 0; h < config.heads; ++h) {
        Tensor wq(d, da), wk(d, da);
        init_tensor(wq, rng, 1.0 / std::sqrt(double(d)));
        init_tensor(wk, rng, 1.0 / std::sqrt(double(d)));
        p["attn_wq" + std::to_string(h)] = std::move(wq);
        p["attn_wk" + std::to_string(h)] = std::move(wk);
    }
    Tensor wv(d, da), wh(da, d);
    init_tensor(wv, rng, 1.0 / std::sqrt(double(d)));
    init_tensor(wh, rng, 1.0 / std::sqrt(double(da)));
    p["attn_wv"] = std::move(wv);
    p["attn_wh"] = std::move(wh);

    add_glu_norm(p, "attn_gate", d, rng);
    add_grn(p, "pos_grn", d, d, d, false, d, rng);
    add_glu_norm(p, "final", d, rng);

    for (std::size_t i = 0; i < config.quantiles.size(); ++i) {
        Tensor w(d, 1);
        init_tensor(w, rng, 1.0 / std::sqrt(double(d)));
        p["q" + std::to_string(i) + "_w"] = std::move(w);
        p["q" + std::to_string(i) + "_b"] = Tensor(1, 1);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Graph construction
// ---------------------------------------------------------------------------

namespace {

struct GraphCtx {
    Tape& tape;
    const TftModel& model;
    std::map<std::string, Var>& cache;
    bool training = false;
    double dropout = 0.0;
    Rng* rng = nullptr;

    Var p(const std::string& name) {
        auto it = cache.find(name);
        if (it != cache.end()) return it->second;
        Var v = tape.leaf(model.at(name));
        cache.emplace(name, v);
        return v;
    }

    GrnVars grn_vars(const std::string& prefix) {
        GrnVars g;
        g.w2 = p(prefix + "_w2");
        g.b2 = p(prefix + "_b2");
        if (model.params.count(prefix + "_w3")) g.w3 = p(prefix + "_w3");
        g.w1 = p(prefix + "_w1");
        g.b1 = p(prefix + "_b1");
        g.w4 = p(prefix + "_w4");
        g.b4 = p(prefix + "_b4");
        g.w5 = p(prefix + "_w5");
        g.b5 = p(prefix + "_b5");
        if (model.params.count(prefix + "_skip")) g.skip_w = p(prefix + "_skip");
        g.ln_gamma = p(prefix + "_ln_g");
        g.ln_beta = p(prefix + "_ln_b");
        return g;
    }

    Var apply_grn(const std::string& prefix, Var a, Var c) {
        const GrnVars w = grn_vars(prefix);
        if (training && dropout > 0.0) {
            const Tensor& out_shape = tape.value(w.b1);
            Tensor mask(tape.value(a).rows, out_shape.cols);
            const double keep = 1.0 - dropout;
            for (double& v : mask.data) v = rng->uniform() < keep ? 1.0 / keep : 0.0;
            return grn(tape, a, c, w, &mask);
        }
        return grn(tape, a, c, w, nullptr);
    }

    Var apply_glu_norm(const std::string& prefix, Var skip, Var x) {
        Var gated = glu(tape, x, p(prefix + "_w4"), p(prefix + "_b4"), p(prefix + "_w5"),
                        p(prefix + "_b5"));
        Var normed = tape.layernorm_rows(tape.add(skip, gated));
        return tape.add_row(tape.mul_row(normed, p(prefix + "_ln_g")), p(prefix + "_ln_b"));
    }
};

struct LstmState {
    Var h, c;
};

LstmState lstm_step(GraphCtx& g, const std::string& base, Var x, const LstmState& prev) {
    auto gate = [&](const char* name) {
        return g.tape.add_row(
            g.tape.add(g.tape.matmul(x, g.p(base + "_" + name + "_wx")),
                       g.tape.matmul(prev.h, g.p(base + "_" + name + "_wh"))),
            g.p(base + "_" + name + "_b"));
    };
    Var i = g.tape.sigmoid(gate("i"));
    Var f = g.tape.sigmoid(gate("f"));
    Var gg = g.tape.tanh(gate("g"));
    Var o = g.tape.sigmoid(gate("o"));
    LstmState next;
    next.c = g.tape.add(g.tape.mul(f, prev.c), g.tape.mul(i, gg));
    next.h = g.tape.mul(o, g.tape.tanh(next.c));
    return next;
}

// Runs one LSTM stack over a sequence; initial[l] seeds layer l.
struct LstmOut {
    Var seq;
    std::vector<LstmState> final_states;
};

LstmOut lstm_stack(GraphCtx& g, const char* side, Var seq, std::size_t layers,
                   const std::vector<LstmState>& initial) {
    const std::size_t n = g.tape.value(seq).rows;
    Var layer_in = seq;
    LstmOut out;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string base = std::string(side) + "_lstm" + std::to_string(l);
        LstmState st = initial[l];
        std::vector<Var> hs;
        hs.reserve(n);
        for (std::size_t t = 0; t < n; ++t) {
            Var x = g.tape.slice_rows(layer_in, t, t + 1);
            st = lstm_step(g, base, x, st);
            hs.push_back(st.h);
        }
        layer_in = g.tape.concat_rows(hs);
        out.final_states.push_back(st);
    }
    out.seq = layer_in;
    return out;
}

Var embed_sequence(GraphCtx& g, const std::string& var_name, const std::vector<double>& col) {
    Tensor c(col.size(), 1);
    c.data = col;
    Var cv = g.tape.constant(std::move(c));
    return g.tape.add_row(g.tape.matmul(cv, g.p("emb_" + var_name + "_w")),
                          g.p("emb_" + var_name + "_b"));
}

// Variable selection: softmax weights from the flattened embeddings, each
// variable refined by its own GRN, weighted sum across variables.
Var vsn(GraphCtx& g, const std::string& prefix, const std::vector<Var>& embeds, Var c_s) {
    Var flat = g.tape.concat_cols(embeds);
    Var sel = g.tape.softmax_rows(g.apply_grn(prefix + "_sel", flat, c_s));
    Var combined;
    for (std::size_t j = 0; j < embeds.size(); ++j) {
        Var refined = g.apply_grn(prefix + "_var" + std::to_string(j), embeds[j], Var{});
        Var weighted = g.tape.mul_col(refined, g.tape.slice_cols(sel, j, j + 1));
        combined = j == 0 ? weighted : g.tape.add(combined, weighted);
    }
    return combined;
}

double time_feature(std::size_t pos, std::size_t window) {
    return (double(pos) - double(window - 1)) / double(window);
}

struct ForwardOut {
    std::vector<Var> quantile_heads;  // one tau x 1 output per quantile
    Tensor mean_attention;            // tau x (window + tau)
};

ForwardOut build_forward(GraphCtx& g, const TftInput& input) {
    const TftConfig& cfg = g.model.config;
    const std::size_t w = cfg.input_window, tau = cfg.tau_max, d = cfg.d_model;
    if (input.past_values.size() != w)
        throw std::invalid_argument("tft_forward: history length must equal input_window");
    if (cfg.covariate_count > 0 &&
        (input.past_covs.size() != w || input.future_covs.size() != tau))
        throw std::invalid_argument("tft_forward: covariates missing for some positions");

    // Static context vectors.
    Tensor onehot(1, std::max<std::size_t>(g.model.vocab.size(), 1));
    bool found = false;
    for (std::size_t i = 0; i < g.model.vocab.size(); ++i)
        if (g.model.vocab[i] == input.static_id) {
            onehot(0, i) = 1.0;
            found = true;
            break;
        }
    if (!found)
        for (double& v : onehot.data) v = 1.0 / double(onehot.size());
    Var e_static = g.tape.matmul(g.tape.constant(std::move(onehot)), g.p("static_emb"));
    Var c_s = g.apply_grn("ctx_s", e_static, Var{});
    Var c_c = g.apply_grn("ctx_c", e_static, Var{});
    Var c_h = g.apply_grn("ctx_h", e_static, Var{});
    Var c_e = g.apply_grn("ctx_e", e_static, Var{});

    // Per-variable embeddings for the encoder window.
    std::vector<double> val_col(w), time_col(w);
    for (std::size_t t = 0; t < w; ++t) {
        val_col[t] = (input.past_values[t] - g.model.norm_mean) / g.model.norm_std;
        time_col[t] = time_feature(t, w);
    }
    std::vector<Var> past_embeds{embed_sequence(g, "value", val_col),
                                 embed_sequence(g, "time", time_col)};
    for (std::size_t j = 0; j < cfg.covariate_count; ++j) {
        std::vector<double> col(w);
        for (std::size_t t = 0; t < w; ++t) col[t] = input.past_covs[t][j];
        past_embeds.push_back(embed_sequence(g, "cov" + std::to_string(j), col));
    }

    // Decoder (known future) embeddings.
    std::vector<double> ftime_col(tau);
    for (std::size_t t = 0; t < tau; ++t) ftime_col[t] = time_feature(w + t, w);
    std::vector<Var> fut_embeds{embed_sequence(g, "time", ftime_col)};
    for (std::size_t j = 0; j < cfg.covariate_count; ++j) {
        std::vector<double> col(tau);
        for (std::size_t t = 0; t < tau; ++t) col[t] = input.future_covs[t][j];
        fut_embeds.push_back(embed_sequence(g, "cov" + std::to_string(j), col));
    }

    Var past_combined = vsn(g, "vsn_past", past_embeds, c_s);
    Var fut_combined = vsn(g, "vsn_fut", fut_embeds, c_s);

    // LSTM encoder-decoder seeded by the static contexts.
    std::vector<LstmState> enc_init(cfg.lstm_layers);
    for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
        if (l == 0) {
            enc_init[l] = {c_h, c_c};
        } else {
            enc_init[l] = {g.tape.constant(Tensor(1, d)), g.tape.constant(Tensor(1, d))};
        }
    }
    LstmOut enc = lstm_stack(g, "enc", past_combined, cfg.lstm_layers, enc_init);
    LstmOut dec = lstm_stack(g, "dec", fut_combined, cfg.lstm_layers, enc.final_states);

    Var input_seq = g.tape.concat_rows({past_combined, fut_combined});
    Var lstm_seq = g.tape.concat_rows({enc.seq, dec.seq});
    Var tilde_phi = g.apply_glu_norm("skip", input_seq, lstm_seq);

    Var theta = g.apply_grn("enrich", tilde_phi, c_e);

    // Causal interpretable multi-head self-attention over the whole sequence;
    // decoder positions are the queries.
    const std::size_t n = w + tau;
    Var q = g.tape.slice_rows(theta, w, n);
    Tensor mask(tau, n);
    for (std::size_t i = 0; i < tau; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j > w + i) mask(i, j) = -1e9;
    std::vector<Var> wq, wk;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        wq.push_back(g.p("attn_wq" + std::to_string(h)));
        wk.push_back(g.p("attn_wk" + std::to_string(h)));
    }
    ForwardOut out;
    Var attn = interpretable_multihead(g.tape, q, theta, theta, wq, wk, g.p("attn_wv"),
                                       g.p("attn_wh"), &mask, &out.mean_attention);

    Var theta_dec = q;
    Var delta = g.apply_glu_norm("attn_gate", theta_dec, attn);
    Var psi = g.apply_grn("pos_grn", delta, Var{});
    Var tilde_phi_dec = g.tape.slice_rows(tilde_phi, w, n);
    Var psi_tilde = g.apply_glu_norm("final", tilde_phi_dec, psi);

    for (std::size_t i = 0; i < cfg.quantiles.size(); ++i)
        out.quantile_heads.push_back(
            g.tape.add_row(g.tape.matmul(psi_tilde, g.p("q" + std::to_string(i) + "_w")),
                           g.p("q" + std::to_string(i) + "_b")));
    return out;
}

AttentionReport attention_report(const Tensor& mean_attention, std::size_t window) {
    AttentionReport report;
    for (std::size_t i = 0; i < mean_attention.rows; ++i) {
        AttentionReport::Step step;
        step.tau = i + 1;
        step.weights.assign(mean_attention.data.begin() + i * mean_attention.cols,
                            mean_attention.data.begin() + (i + 1) * mean_attention.cols);
        std::size_t best = 0;
        for (std::size_t j = 1; j < window; ++j)
            if (step.weights[j] > step.weights[best]) best = j;
        step.argmax = best;
        step.max_weight = step.weights[best];
        report.steps.push_back(std::move(step));
    }
    return report;
}

}  // namespace

TftOutput tft_forward(const TftModel& model, const TftInput& input) {
    Tape tape;
    std::map<std::string, Var> cache;
    GraphCtx g{tape, model, cache};
    const ForwardOut fwd = build_forward(g, input);

    TftOutput out;
    for (std::size_t i = 0; i < model.config.quantiles.size(); ++i) {
        const Tensor& v = tape.value(fwd.quantile_heads[i]);
        std::vector<double> steps(v.rows);
        for (std::size_t t = 0; t < v.rows; ++t)
            steps[t] = v(t, 0) * model.norm_std + model.norm_mean;
        out.quantile_forecasts[model.config.quantiles[i]] = std::move(steps);
    }
    out.attention = attention_report(fwd.mean_attention, model.config.input_window);
    return out;
}

AttentionReport extract_attention(const TftModel& model, const TftInput& input) {
    return tft_forward(model, input).attention;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct Sample {
    std::size_t trace = 0;
    std::size_t start = 0;  // first encoder position
};

TftInput make_input(const TrainTrace& trace, std::size_t start, const TftConfig& cfg) {
    TftInput in;
    in.static_id = trace.id;
    in.window_start = start;
    const std::size_t w = cfg.input_window, tau = cfg.tau_max;
    in.past_values.assign(trace.values.begin() + start, trace.values.begin() + start + w);
    if (cfg.covariate_count > 0) {
        in.past_covs.assign(trace.covs.begin() + start, trace.covs.begin() + start + w);
        in.future_covs.assign(trace.covs.begin() + start + w,
                              trace.covs.begin() + start + w + tau);
    }
    return in;
}

}  // namespace

TftModel train_tft(const std::vector<TrainTrace>& traces, const TftConfig& config,
                   TrainStats* stats) {
    config.validate();
    if (traces.empty()) throw std::invalid_argument("train_tft: no traces");
    const std::size_t w = config.input_window, tau = config.tau_max;

    std::vector<std::string> vocab;
    std::vector<Sample> samples;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& tr = traces[i];
        if (tr.values.size() <= w + tau)
            throw std::invalid_argument("train_tft: trace " + tr.id +
                                        " shorter than input_window + tau_max");
        if (config.covariate_count > 0 && tr.covs.size() != tr.values.size())
            throw std::invalid_argument("train_tft: covariates misaligned for " + tr.id);
        vocab.push_back(tr.id);
        for (std::size_t s = 0; s + w + tau <= tr.values.size(); ++s)
            samples.push_back({i, s});
        for (double v : tr.values) {
            sum += v;
            ++count;
        }
    }
    if (samples.empty()) throw std::invalid_argument("train_tft: empty sample set");

    TftModel model = init_model(config, vocab, config.seed);
    model.norm_mean = sum / double(count);
    double var = 0.0;
    for (const auto& tr : traces)
        for (double v : tr.values) var += (v - model.norm_mean) * (v - model.norm_mean);
    model.norm_std = std::sqrt(var / double(count));
    if (model.norm_std < 1e-12) model.norm_std = 1.0;

    // Adam state per parameter.
    std::map<std::string, Tensor> m1, m2;
    for (const auto& [name, t] : model.params) {
        m1[name] = Tensor(t.rows, t.cols);
        m2[name] = Tensor(t.rows, t.cols);
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t adam_t = 0;

    Rng shuffle_rng(Rng::derive(config.seed, 0xa11ce));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        // Fisher-Yates shuffle with the dedicated stream.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        double epoch_loss = 0.0;
        std::size_t epoch_terms = 0;
        Rng dropout_rng(Rng::derive(config.seed, 0xd0 + epoch));
        for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
            const std::size_t b1 = std::min(order.size(), b0 + batch);
            Tape tape;
            std::map<std::string, Var> cache;
            GraphCtx g{tape, model, cache, true, config.dropout_rate, &dropout_rng};

            Var loss;
            for (std::size_t s = b0; s < b1; ++s) {
                const Sample& smp = samples[order[s]];
                const TftInput in = make_input(traces[smp.trace], smp.start, config);
                const ForwardOut fwd = build_forward(g, in);

                Tensor target(tau, 1);
                for (std::size_t t = 0; t < tau; ++t)
                    target(t, 0) = (traces[smp.trace].values[smp.start + w + t] -
                                    model.norm_mean) /
                                   model.norm_std;
                Var y = tape.constant(std::move(target));
                for (std::size_t qi = 0; qi < config.quantiles.size(); ++qi) {
                    const double q = config.quantiles[qi];
                    Var under = tape.relu(tape.sub(y, fwd.quantile_heads[qi]));
                    Var over = tape.relu(tape.sub(fwd.quantile_heads[qi], y));
                    Var ql = tape.add(tape.scale(under, q), tape.scale(over, 1.0 - q));
                    Var total = tape.sum_all(ql);
                    loss = loss.valid() ? tape.add(loss, total) : total;
                }
            }
            const double denom = double(b1 - b0) * double(tau);
            loss = tape.scale(loss, 1.0 / denom);
            const double loss_val = tape.value(loss).data[0];
            if (!std::isfinite(loss_val)) throw std::runtime_error("train_tft: loss diverged");
            epoch_loss += loss_val * double(b1 - b0);
            epoch_terms += b1 - b0;

            tape.backward(loss);

            ++adam_t;
            const double bc1 = 1.0 - std::pow(beta1, double(adam_t));
            const double bc2 = 1.0 - std::pow(beta2, double(adam_t));
            for (auto& [name, var_handle] : cache) {
                if (!model.params.count(name)) continue;
                const Tensor& grad = tape.grad(var_handle);
                Tensor& theta = model.params[name];
                Tensor& m = m1[name];
                Tensor& v = m2[name];
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    const double gi = grad.data[i];
                    m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * gi;
                    v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * gi * gi;
                    theta.data[i] -= config.learning_rate * (m.data[i] / bc1) /
                                     (std::sqrt(v.data[i] / bc2) + eps);
                }
            }
        }
        if (stats) stats->epoch_losses.push_back(epoch_loss / double(epoch_terms));
    }
    return model;
}

ts::ForecastResult tft_forecast(const TftModel& model, const std::vector<double>& history,
                                const std::vector<std::vector<double>>& covs,
                                const std::string& id, std::size_t h) {
    if (h < 1) throw std::invalid_argument("tft_forecast: h must be >= 1");
    const TftConfig& cfg = model.config;
    const std::size_t w = cfg.input_window, tau = cfg.tau_max;
    if (cfg.covariate_count > 0 && covs.size() < history.size() + h)
        throw std::invalid_argument("tft_forecast: covariates must cover the horizon");

    std::vector<double> work = history;
    if (work.size() < w) work.insert(work.begin(), w - work.size(), work.front());

    ts::ForecastResult result;
    result.origin_index = history.size() - 1;
    result.horizon = h;
    std::map<double, std::vector<double>> bands;
    // Absolute position of the first forecast step, for covariate lookup.
    std::size_t pos = history.size();
    while (result.point.size() < h) {
        TftInput in;
        in.static_id = id;
        in.past_values.assign(work.end() - w, work.end());
        if (cfg.covariate_count > 0) {
            in.past_covs.clear();
            for (std::size_t t = 0; t < w; ++t) {
                const std::size_t p = pos >= w ? pos - w + t : t;
                in.past_covs.push_back(covs[std::min(p, covs.size() - 1)]);
            }
            for (std::size_t t = 0; t < tau; ++t)
                in.future_covs.push_back(covs[std::min(pos + t, covs.size() - 1)]);
        }
        const TftOutput out = tft_forward(model, in);
        const auto& median = out.quantile_forecasts.at(0.5);
        for (std::size_t t = 0; t < tau && result.point.size() < h; ++t) {
            result.point.push_back(median[t]);
            for (const auto& [q, vals] : out.quantile_forecasts) bands[q].push_back(vals[t]);
            work.push_back(median[t]);
            ++pos;
        }
    }
    result.quantiles = std::move(bands);
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string TftModel::to_json() const {
    nlohmann::json j;
    j["config"] = {{"d_model", config.d_model},
                   {"lstm_layers", config.lstm_layers},
                   {"heads", config.heads},
                   {"quantiles", config.quantiles},
                   {"input_window", config.input_window},
                   {"tau_max", config.tau_max},
                   {"dropout_rate", config.dropout_rate},
                   {"learning_rate", config.learning_rate},
                   {"max_epochs", config.max_epochs},
                   {"batch_size", config.batch_size},
                   {"covariate_count", config.covariate_count},
                   {"seed", config.seed}};
    j["vocab"] = vocab;
    j["norm"] = {{"mean", norm_mean}, {"std", norm_std}};
    nlohmann::json tensors = nlohmann::json::object();
    for (const auto& [name, t] : params)
        tensors[name] = {{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
    j["tensors"] = std::move(tensors);
    return j.dump();
}

TftModel TftModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TftModel model;
    const auto& c = j.at("config");
    model.config.d_model = c.at("d_model").get<std::size_t>();
    model.config.lstm_layers = c.at("lstm_layers").get<std::size_t>();
    model.config.heads = c.at("heads").get<std::size_t>();
    model.config.quantiles = c.at("quantiles").get<std::vector<double>>();
    model.config.input_window = c.at("input_window").get<std::size_t>();
    model.config.tau_max = c.at("tau_max").get<std::size_t>();
    model.config.dropout_rate = c.at("dropout_rate").get<double>();
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.max_epochs = c.at("max_epochs").get<std::size_t>();
    model.config.batch_size = c.at("batch_size").get<std::size_t>();
    model.config.covariate_count = c.at("covariate_count").get<std::size_t>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.validate();
    model.vocab = j.at("vocab").get<std::vector<std::string>>();
    model.norm_mean = j.at("norm").at("mean").get<double>();
    model.norm_std = j.at("norm").at("std").get<double>();
    for (const auto& [name, tj] : j.at("tensors").items()) {
        Tensor t(tj.at("rows").get<std::size_t>(), tj.at("cols").get<std::size_t>());
        t.data = tj.at("data").get<std::vector<double>>();
        if (t.data.size() != t.rows * t.cols)
            throw std::runtime_error("tft checkpoint: tensor size mismatch for " + name);
        model.params[name] = std::move(t);
    }
    return model;
}

std::string AttentionReport::to_json() const {
    nlohmann::json j;
    j["steps"] = nlohmann::json::array();
    for (const auto& s : steps)
        j["steps"].push_back({{"tau", s.tau},
                              {"weights", s.weights},
                              {"argmax", s.argmax},
                              {"max_weight", s.max_weight}});
    return j.dump();
}

}  // namespace agebench::tft
