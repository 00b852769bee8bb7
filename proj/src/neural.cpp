#include "agebench/neural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "agebench/kernels.hpp"
#include "agebench/rng.hpp"
#include "agebench/stat_forecast.hpp"

namespace agebench::nn {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> apply_difference(std::span<const double> series, bool diff) {
    if (!diff) return {series.begin(), series.end()};
    std::vector<double> out;
    out.reserve(series.size() - 1);
    for (std::size_t i = 1; i < series.size(); ++i) out.push_back(series[i] - series[i - 1]);
    return out;
}

struct LagMatrix {
    la::Mat x;               // rows x lags, normalized
    std::vector<double> y;   // normalized targets
    double mean = 0.0, sd = 1.0;
};

LagMatrix build_lag_matrix(std::span<const double> series, const LagSpec& spec) {
    const std::vector<double> z = apply_difference(series, spec.difference_first);
    const std::size_t m = spec.max_lag();
    if (z.size() <= m) throw std::invalid_argument("lag matrix: history shorter than max lag");

    LagMatrix lm;
    double s = 0.0;
    for (double v : z) s += v;
    lm.mean = s / static_cast<double>(z.size());
    double var = 0.0;
    for (double v : z) var += (v - lm.mean) * (v - lm.mean);
    lm.sd = std::sqrt(var / static_cast<double>(z.size()));
    if (lm.sd < 1e-12) lm.sd = 1.0;

    const std::size_t rows = z.size() - m;
    lm.x = la::Mat(rows, spec.lags.size());
    lm.y.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = m + r;
        lm.y[r] = (z[t] - lm.mean) / lm.sd;
        for (std::size_t j = 0; j < spec.lags.size(); ++j)
            lm.x(r, j) = (z[t - spec.lags[j]] - lm.mean) / lm.sd;
    }
    return lm;
}

// Forward pass over a batch; returns mean squared error and fills preds.
double forward_mse(const NetCore& net, const la::Mat& x, const std::vector<double>& y,
                   std::vector<double>* preds) {
    const std::size_t rows = x.rows, h = net.hidden_count, l = x.cols;
    double mse = 0.0;
    if (preds) preds->resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double out = net.b2;
        for (std::size_t i = 0; i < h; ++i) {
            double a = net.b1[i];
            for (std::size_t j = 0; j < l; ++j) a += net.w1(i, j) * x(r, j);
            out += net.w2[i] * sigmoid(a);
        }
        if (preds) (*preds)[r] = out;
        const double e = out - y[r];
        mse += e * e;
    }
    return mse / static_cast<double>(rows);
}

}  // namespace

void LagSpec::validate() const {
    if (lags.empty()) throw std::invalid_argument("lag spec: empty");
    for (std::size_t i = 0; i < lags.size(); ++i) {
        if (lags[i] < 1) throw std::invalid_argument("lag spec: lags must be >= 1");
        if (i > 0 && lags[i] <= lags[i - 1])
            throw std::invalid_argument("lag spec: lags must be strictly increasing");
    }
}

LagSpec select_lags(std::span<const double> series, std::size_t max_lag) {
    if (max_lag < 1) throw std::invalid_argument("select_lags: max_lag must be >= 1");
    if (series.size() <= 3 * max_lag)
        throw std::invalid_argument("select_lags: series too short");

    LagSpec spec;
    try {
        const std::size_t adf_lag =
            std::max<std::size_t>(1, std::min<std::size_t>(4, series.size() / 15));
        spec.difference_first = !stat::adf_test(series, adf_lag).reject_unit_root;
    } catch (const std::exception&) {
        spec.difference_first = true;  // degenerate regression: difference defensively
    }

    const std::vector<double> z = apply_difference(series, spec.difference_first);
    const auto p = stat::pacf(z, std::min(max_lag, z.size() - 2));
    const double band = 1.96 / std::sqrt(static_cast<double>(z.size()));
    spec.lags.push_back(1);
    for (std::size_t k = 2; k <= p.size(); ++k)
        if (std::abs(p[k - 1]) > band) spec.lags.push_back(k);
    spec.validate();
    return spec;
}

double NetCore::predict_next(std::span<const double> history) const {
    const std::vector<double> z = apply_difference(history, lag_spec.difference_first);
    const std::size_t m = lag_spec.max_lag();
    if (z.size() < m) throw std::invalid_argument("predict_next: insufficient history");
    double out = b2;
    for (std::size_t i = 0; i < hidden_count; ++i) {
        double a = b1[i];
        for (std::size_t j = 0; j < lag_spec.lags.size(); ++j) {
            const double v = (z[z.size() - lag_spec.lags[j]] - norm_mean) / norm_std;
            a += w1(i, j) * v;
        }
        out += w2[i] * sigmoid(a);
    }
    const double z_next = out * norm_std + norm_mean;
    return lag_spec.difference_first ? history.back() + z_next : z_next;
}

namespace {

NetCore init_core(const LagSpec& spec, std::size_t hidden, double mean, double sd, Rng& rng,
                  double init_scale) {
    NetCore net;
    net.lag_spec = spec;
    net.hidden_count = hidden;
    net.norm_mean = mean;
    net.norm_std = sd;
    net.w1 = la::Mat(hidden, spec.lags.size());
    net.b1.assign(hidden, 0.0);
    net.w2.assign(hidden, 0.0);
    for (double& v : net.w1.data) v = rng.uniform(-init_scale, init_scale);
    for (double& v : net.b1) v = rng.uniform(-init_scale, init_scale);
    for (double& v : net.w2) v = rng.uniform(-init_scale, init_scale);
    net.b2 = rng.uniform(-init_scale, init_scale);
    return net;
}

MlpForecaster train_mlp_on(const la::Mat& x, const std::vector<double>& y,
                           const LagSpec& spec, std::size_t hidden, double mean, double sd,
                           std::uint64_t seed) {
    Rng rng(seed);
    const double init_scale = 1.0 / std::sqrt(static_cast<double>(spec.lags.size() + 1));
    NetCore net = init_core(spec, hidden, mean, sd, rng, init_scale);

    const std::size_t rows = x.rows, l = x.cols;
    constexpr int max_epochs = 2000;
    constexpr double lr = 0.4;
    double prev = 1e300;
    int flat = 0;
    std::vector<double> hid(hidden), delta(hidden);
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        // Full-batch gradients.
        la::Mat gw1(hidden, l);
        std::vector<double> gb1(hidden, 0.0), gw2(hidden, 0.0);
        double gb2 = 0.0, loss = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            double out = net.b2;
            for (std::size_t i = 0; i < hidden; ++i) {
                double a = net.b1[i];
                for (std::size_t j = 0; j < l; ++j) a += net.w1(i, j) * x(r, j);
                hid[i] = sigmoid(a);
                out += net.w2[i] * hid[i];
            }
            const double e = out - y[r];
            loss += e * e;
            gb2 += e;
            for (std::size_t i = 0; i < hidden; ++i) {
                gw2[i] += e * hid[i];
                delta[i] = e * net.w2[i] * hid[i] * (1.0 - hid[i]);
                gb1[i] += delta[i];
                for (std::size_t j = 0; j < l; ++j) gw1(i, j) += delta[i] * x(r, j);
            }
        }
        loss /= static_cast<double>(rows);
        if (!std::isfinite(loss)) throw std::runtime_error("train_mlp: diverged");
        const double scale = lr / static_cast<double>(rows);
        for (std::size_t i = 0; i < hidden; ++i) {
            net.b1[i] -= scale * gb1[i];
            net.w2[i] -= scale * gw2[i];
            for (std::size_t j = 0; j < l; ++j) net.w1(i, j) -= scale * gw1(i, j);
        }
        net.b2 -= scale * gb2;

        if (prev - loss < 1e-12 * (loss + 1e-12)) {
            if (++flat >= 25) break;  // plateau
        } else {
            flat = 0;
        }
        prev = loss;
    }

    MlpForecaster out;
    out.net = std::move(net);
    out.train_mse = forward_mse(out.net, x, y, nullptr);
    return out;
}

std::vector<double> lasso_fit(const la::Mat& h, const std::vector<double>& y, double lambda,
                              double* intercept) {
    // Objective: (1/2n) ||y - b0 - H b||^2 + lambda * sum |b_j| with
    // standardized columns inside, unwound on exit.
    const std::size_t n = h.rows, k = h.cols;
    std::vector<double> cm(k, 0.0), cs(k, 1.0);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += h(i, j);
        cm[j] = s / static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += (h(i, j) - cm[j]) * (h(i, j) - cm[j]);
        cs[j] = std::sqrt(v / static_cast<double>(n));
        if (cs[j] < 1e-12) cs[j] = 0.0;  // constant column: coefficient pinned to 0
    }
    double ym = 0.0;
    for (double v : y) ym += v;
    ym /= static_cast<double>(n);

    // Standardized design, constant columns dropped.
    la::Mat xs(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        if (cs[j] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) xs(i, j) = (h(i, j) - cm[j]) / cs[j];
    }

    std::vector<double> beta(k, 0.0);
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ym;

    // One cyclic sweep at penalty l; returns the largest coefficient move.
    auto sweep_once = [&](double l) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (cs[j] == 0.0) continue;
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += xs(i, j) * resid[i];
            rho = rho / static_cast<double>(n) + beta[j];
            const double bj = std::copysign(std::max(0.0, std::abs(rho) - l), rho);
            const double db = bj - beta[j];
            if (db != 0.0) {
                for (std::size_t i = 0; i < n; ++i) resid[i] -= db * xs(i, j);
                beta[j] = bj;
            }
            max_delta = std::max(max_delta, std::abs(db));
        }
        return max_delta;
    };

    if (lambda == 0.0) {
        // Exact least squares on the standardized system as the start; the
        // descent polish then terminates at a zero-gradient point.
        std::vector<std::size_t> active;
        for (std::size_t j = 0; j < k; ++j)
            if (cs[j] > 0.0) active.push_back(j);
        if (!active.empty()) {
            la::Mat gram(active.size(), active.size());
            std::vector<double> corr(active.size(), 0.0);
            for (std::size_t a = 0; a < active.size(); ++a) {
                for (std::size_t i = 0; i < n; ++i)
                    corr[a] += xs(i, active[a]) * (y[i] - ym);
                for (std::size_t b = a; b < active.size(); ++b) {
                    double g = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                        g += xs(i, active[a]) * xs(i, active[b]);
                    gram(a, b) = g;
                    gram(b, a) = g;
                }
            }
            std::vector<double> warm;
            try {
                warm = la::solve(gram, corr);
            } catch (const std::runtime_error&) {
                throw std::runtime_error("lasso_fit: singular design with zero penalty");
            }
            for (std::size_t a = 0; a < active.size(); ++a) beta[active[a]] = warm[a];
            for (std::size_t i = 0; i < n; ++i) {
                double fit = ym;
                for (std::size_t a = 0; a < active.size(); ++a)
                    fit += warm[a] * xs(i, active[a]);
                resid[i] = y[i] - fit;
            }
        }
    } else {
        // Pathwise descent from lambda_max (all-zero solution) down to the
        // requested penalty; warm starts keep ill-conditioned designs tame.
        double lambda_max = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (cs[j] == 0.0) continue;
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += xs(i, j) * resid[i];
            lambda_max = std::max(lambda_max, std::abs(rho) / static_cast<double>(n));
        }
        if (lambda < lambda_max) {
            constexpr int path_steps = 30;
            const double ratio = std::pow(lambda / lambda_max, 1.0 / path_steps);
            double l = lambda_max;
            for (int s = 0; s < path_steps; ++s) {
                l *= ratio;
                for (int it = 0; it < 100; ++it)
                    if (sweep_once(std::max(l, lambda)) < 1e-7) break;
            }
        }
    }

    constexpr int max_sweeps = 10000;
    constexpr double tol = 1e-8;
    bool converged = false;
    double prev_obj = 1e300;
    int flat = 0;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        if (sweep_once(lambda) < tol) {
            converged = true;
            break;
        }
        // Near-duplicate columns let coefficients creep along a flat ridge;
        // once the objective stops moving the fit is done for any purpose.
        double obj = 0.0;
        for (double r : resid) obj += r * r;
        obj = obj / (2.0 * static_cast<double>(n));
        for (double b : beta) obj += lambda * std::abs(b);
        if (!std::isfinite(obj)) break;
        if (prev_obj - obj < 1e-13 * (obj + 1e-13)) {
            if (++flat >= 3) converged = true;
        } else {
            flat = 0;
        }
        prev_obj = obj;
    }
    if (!converged)
        throw std::runtime_error("lasso_fit: coordinate descent did not converge "
                                 "(singular design with zero penalty?)");

    // Unwind standardization.
    std::vector<double> out(k, 0.0);
    double b0 = ym;
    for (std::size_t j = 0; j < k; ++j) {
        if (cs[j] == 0.0) continue;
        out[j] = beta[j] / cs[j];
        b0 -= out[j] * cm[j];
    }
    *intercept = b0;
    return out;
}

}  // namespace

MlpForecaster train_mlp_fixed(std::span<const double> series, const LagSpec& lag_spec,
                              std::size_t hidden_count, std::uint64_t seed) {
    lag_spec.validate();
    const LagMatrix lm = build_lag_matrix(series, lag_spec);
    return train_mlp_on(lm.x, lm.y, lag_spec, hidden_count, lm.mean, lm.sd, seed);
}

std::size_t select_hidden_count(std::span<const double> series, const LagSpec& lag_spec,
                                std::uint64_t seed, bool elm, double l1_penalty) {
    lag_spec.validate();
    const LagMatrix lm = build_lag_matrix(series, lag_spec);
    const std::size_t rows = lm.x.rows;
    if (rows < 10) return 2;  // too little data to cross-validate

    constexpr std::size_t folds = 5;
    double best_mse = 1e300;
    std::size_t best_h = 2;
    for (std::size_t h = 2; h <= 20; ++h) {
        double cv = 0.0;
        bool ok = true;
        for (std::size_t f = 0; f < folds && ok; ++f) {
            const std::size_t lo = rows * f / folds, hi = rows * (f + 1) / folds;
            la::Mat xtr(rows - (hi - lo), lm.x.cols);
            std::vector<double> ytr;
            ytr.reserve(rows - (hi - lo));
            std::size_t rr = 0;
            for (std::size_t r = 0; r < rows; ++r) {
                if (r >= lo && r < hi) continue;
                for (std::size_t j = 0; j < lm.x.cols; ++j) xtr(rr, j) = lm.x(r, j);
                ytr.push_back(lm.y[r]);
                ++rr;
            }
            try {
                NetCore net;
                if (elm) {
                    Rng rng(Rng::derive(seed, 1000 + f));
                    net = init_core(lag_spec, h, lm.mean, lm.sd, rng, 1.0);
                    la::Mat hid(xtr.rows, h);
                    for (std::size_t r = 0; r < xtr.rows; ++r)
                        for (std::size_t i = 0; i < h; ++i) {
                            double a = net.b1[i];
                            for (std::size_t j = 0; j < xtr.cols; ++j)
                                a += net.w1(i, j) * xtr(r, j);
                            hid(r, i) = sigmoid(a);
                        }
                    double b2 = 0.0;
                    net.w2 = lasso_fit(hid, ytr, l1_penalty, &b2);
                    net.b2 = b2;
                } else {
                    net = train_mlp_on(xtr, ytr, lag_spec, h, lm.mean, lm.sd,
                                       Rng::derive(seed, 1000 + f))
                              .net;
                }
                for (std::size_t r = lo; r < hi; ++r) {
                    double out = net.b2;
                    for (std::size_t i = 0; i < h; ++i) {
                        double a = net.b1[i];
                        for (std::size_t j = 0; j < lm.x.cols; ++j)
                            a += net.w1(i, j) * lm.x(r, j);
                        out += net.w2[i] * sigmoid(a);
                    }
                    cv += (out - lm.y[r]) * (out - lm.y[r]);
                }
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (ok && cv < best_mse) {
            best_mse = cv;
            best_h = h;
        }
    }
    return best_h;
}

MlpForecaster train_mlp(std::span<const double> series, const LagSpec& lag_spec,
                        std::uint64_t seed) {
    const std::size_t h = select_hidden_count(series, lag_spec, seed, false, 0.0);
    return train_mlp_fixed(series, lag_spec, h, seed);
}

ElmForecaster train_elm(std::span<const double> series, const LagSpec& lag_spec,
                        std::size_t hidden_count, double l1_penalty, std::uint64_t seed) {
    lag_spec.validate();
    if (l1_penalty < 0.0) throw std::invalid_argument("train_elm: negative penalty");
    const LagMatrix lm = build_lag_matrix(series, lag_spec);

    Rng rng(seed);
    ElmForecaster out;
    out.l1_penalty = l1_penalty;
    out.net = init_core(lag_spec, hidden_count, lm.mean, lm.sd, rng, 1.0);

    la::Mat hid(lm.x.rows, hidden_count);
    for (std::size_t r = 0; r < lm.x.rows; ++r)
        for (std::size_t i = 0; i < hidden_count; ++i) {
            double a = out.net.b1[i];
            for (std::size_t j = 0; j < lm.x.cols; ++j) a += out.net.w1(i, j) * lm.x(r, j);
            hid(r, i) = sigmoid(a);
        }
    double b2 = 0.0;
    out.net.w2 = lasso_fit(hid, lm.y, l1_penalty, &b2);
    out.net.b2 = b2;
    return out;
}

void EnsembleForecaster::validate() const {
    if (members.empty()) throw std::invalid_argument("ensemble: no members");
    for (const NetCore& m : members)
        if (m.lag_spec.lags != members.front().lag_spec.lags ||
            m.lag_spec.difference_first != members.front().lag_spec.difference_first)
            throw std::invalid_argument("ensemble: members disagree on lag spec");
}

EnsembleForecaster train_ensemble(std::span<const double> series, const LagSpec& lag_spec,
                                  MemberKind kind, const EnsembleConfig& config,
                                  std::uint64_t seed) {
    std::size_t hidden = config.hidden_count;
    if (hidden == 0)
        hidden = select_hidden_count(series, lag_spec, seed, kind == MemberKind::Elm,
                                     config.l1_penalty);

    EnsembleForecaster ens;
    ens.kind = kind;
    ens.members.resize(config.member_count);
    std::vector<std::string> errors(config.member_count);
    kernels::parallel_for(config.member_count, [&](std::size_t i) {
        const std::uint64_t member_seed = Rng::derive(seed, i);
        try {
            if (kind == MemberKind::Elm)
                ens.members[i] =
                    train_elm(series, lag_spec, hidden, config.l1_penalty, member_seed).net;
            else
                ens.members[i] = train_mlp_fixed(series, lag_spec, hidden, member_seed).net;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("train_ensemble: member failed: " + e);
    return ens;
}

double median_of(std::vector<double> v) { return ts::median(std::move(v)); }

ts::ForecastResult forecast_recursive(const NetCore& model, std::span<const double> history,
                                      std::size_t h) {
    if (h < 1) throw std::invalid_argument("forecast_recursive: h must be >= 1");
    std::vector<double> work(history.begin(), history.end());
    ts::ForecastResult result;
    result.origin_index = history.size() - 1;
    result.horizon = h;
    for (std::size_t s = 0; s < h; ++s) {
        const double next = model.predict_next(work);
        if (!std::isfinite(next))
            throw std::runtime_error("forecast_recursive: non-finite forecast");
        work.push_back(next);
        result.point.push_back(next);
    }
    return result;
}

ts::ForecastResult ensemble_forecast(const EnsembleForecaster& ensemble,
                                     std::span<const double> history, std::size_t h) {
    ensemble.validate();
    std::vector<ts::ForecastResult> per_member(ensemble.members.size());
    for (std::size_t i = 0; i < ensemble.members.size(); ++i)
        per_member[i] = forecast_recursive(ensemble.members[i], history, h);

    ts::ForecastResult result;
    result.origin_index = history.size() - 1;
    result.horizon = h;
    for (std::size_t s = 0; s < h; ++s) {
        std::vector<double> step(ensemble.members.size());
        for (std::size_t i = 0; i < ensemble.members.size(); ++i)
            step[i] = per_member[i].point[s];
        result.point.push_back(median_of(std::move(step)));
    }
    return result;
}

}  // namespace agebench::nn
