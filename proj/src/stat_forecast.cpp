#include "agebench/stat_forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "agebench/linalg.hpp"
#include "agebench/optim.hpp"

namespace agebench::stat {

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::vector<double> difference(std::span<const double> y, int d) {
    std::vector<double> out(y.begin(), y.end());
    for (int k = 0; k < d; ++k) {
        std::vector<double> next;
        next.reserve(out.size() - 1);
        for (std::size_t i = 1; i < out.size(); ++i) next.push_back(out[i] - out[i - 1]);
        out = std::move(next);
    }
    return out;
}

// OLS via normal equations; returns coefficients and the t-statistic of the
// requested column. Throws on a numerically degenerate regression.
struct OlsResult {
    std::vector<double> beta;
    double t_stat_of = 0.0;
};

OlsResult ols_tstat(const la::Mat& x, const std::vector<double>& y, std::size_t column) {
    const std::size_t n = x.rows, k = x.cols;
    if (n <= k) throw std::runtime_error("ols: not enough observations");
    la::Mat xtx(k, k);
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            xty[a] += x(i, a) * y[i];
            for (std::size_t b = 0; b < k; ++b) xtx(a, b) += x(i, a) * x(i, b);
        }
    }
    OlsResult r;
    r.beta = la::solve(xtx, xty);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t a = 0; a < k; ++a) fit += x(i, a) * r.beta[a];
        const double e = y[i] - fit;
        rss += e * e;
    }
    const double sigma2 = rss / static_cast<double>(n - k);
    if (!(sigma2 > 1e-24))
        throw std::runtime_error("ols: degenerate regression (zero residual variance)");
    // Variance of beta[column] = sigma2 * (XtX)^-1[column,column].
    std::vector<double> e(k, 0.0);
    e[column] = 1.0;
    const auto col = la::solve(xtx, e);
    const double var = sigma2 * col[column];
    if (!(var > 0.0)) throw std::runtime_error("ols: nonpositive coefficient variance");
    r.t_stat_of = r.beta[column] / std::sqrt(var);
    return r;
}

}  // namespace

AdfResult adf_test(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (n <= max_lag + 2) throw std::invalid_argument("adf_test: insufficient data");

    // delta y_t = const + rho * y_{t-1} + sum gamma_i delta y_{t-i}
    const std::size_t rows = n - 1 - max_lag;
    const std::size_t k = 2 + max_lag;
    if (rows <= k) throw std::invalid_argument("adf_test: insufficient data");
    la::Mat x(rows, k);
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = max_lag + 1 + r;  // index into series
        y[r] = series[t] - series[t - 1];
        x(r, 0) = 1.0;
        x(r, 1) = series[t - 1];
        for (std::size_t i = 1; i <= max_lag; ++i)
            x(r, 1 + i) = series[t - i] - series[t - i - 1];
    }
    const auto fit = ols_tstat(x, y, 1);

    AdfResult result;
    result.statistic = fit.t_stat_of;
    const double T = static_cast<double>(rows);
    // 5% response-surface critical value for the constant-only regression.
    result.critical_5pct = -2.86154 - 2.8903 / T - 4.234 / (T * T) - 40.04 / (T * T * T);
    result.reject_unit_root = result.statistic < result.critical_5pct;
    return result;
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (n < 2) throw std::invalid_argument("acf: series too short");
    const double mu = mean_of(series);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mu) * (v - mu);
    std::vector<double> out(max_lag + 1, 0.0);
    out[0] = 1.0;
    if (c0 <= 0.0) return out;
    for (std::size_t k = 1; k <= max_lag && k < n; ++k) {
        double ck = 0.0;
        for (std::size_t t = k; t < n; ++t) ck += (series[t] - mu) * (series[t - k] - mu);
        out[k] = ck / c0;
    }
    return out;
}

std::vector<double> pacf(std::span<const double> series, std::size_t max_lag) {
    const auto rho = acf(series, max_lag);
    std::vector<double> out(max_lag, 0.0);
    std::vector<double> prev, cur;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = rho[k], den = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            num -= prev[j - 1] * rho[k - j];
            den -= prev[j - 1] * rho[j];
        }
        const double pk = std::abs(den) > 1e-300 ? num / den : 0.0;
        cur.assign(k, 0.0);
        cur[k - 1] = pk;
        for (std::size_t j = 1; j < k; ++j) cur[j - 1] = prev[j - 1] - pk * prev[k - 1 - j];
        out[k - 1] = pk;
        prev = cur;
    }
    return out;
}

// ---------------------------------------------------------------------------
// ARIMA
// ---------------------------------------------------------------------------

namespace {

// Map unconstrained u to coefficients of a stationary AR polynomial through
// partial autocorrelations r_i = tanh(u_i) and the Durbin-Levinson recursion.
std::vector<double> pacf_to_ar(const std::vector<double>& r) {
    std::vector<double> phi;
    for (std::size_t k = 0; k < r.size(); ++k) {
        std::vector<double> next(k + 1);
        next[k] = r[k];
        for (std::size_t j = 0; j < k; ++j) next[j] = phi[j] - r[k] * phi[k - 1 - j];
        phi = std::move(next);
    }
    return phi;
}

std::vector<double> ar_to_pacf(const std::vector<double>& phi_in) {
    std::vector<double> phi = phi_in, r(phi_in.size(), 0.0);
    for (std::size_t k = phi.size(); k-- > 0;) {
        r[k] = phi[k];
        if (std::abs(r[k]) >= 1.0) r[k] = std::copysign(0.98, r[k]);
        if (k == 0) break;
        std::vector<double> prev(k);
        const double denom = 1.0 - r[k] * r[k];
        for (std::size_t j = 0; j < k; ++j)
            prev[j] = (phi[j] + r[k] * phi[k - 1 - j]) / (denom > 1e-12 ? denom : 1e-12);
        phi = std::move(prev);
    }
    return r;
}

struct ArmaStateSpace {
    la::Mat t;  // transition
    std::vector<double> r;  // disturbance loading
    std::size_t m;
};

ArmaStateSpace build_state_space(const std::vector<double>& phi,
                                 const std::vector<double>& theta) {
    const std::size_t p = phi.size(), q = theta.size();
    const std::size_t m = std::max(p, q + 1);
    ArmaStateSpace ss;
    ss.m = m;
    // Harvey form: y_t = alpha_t[0], alpha_{t+1} = T alpha_t + R eps_{t+1}.
    ss.t = la::Mat(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        if (i < p) ss.t(i, 0) = phi[i];
        if (i + 1 < m) ss.t(i, i + 1) = 1.0;
    }
    ss.r.assign(m, 0.0);
    ss.r[0] = 1.0;
    for (std::size_t j = 0; j < q; ++j) ss.r[j + 1] = theta[j];
    return ss;
}

// Stationary covariance: vec(P) = (I - T kron T)^-1 vec(R R').
la::Mat stationary_covariance(const ArmaStateSpace& ss) {
    const std::size_t m = ss.m, mm = m * m;
    la::Mat a(mm, mm);
    std::vector<double> b(mm, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t row = i * m + j;
            b[row] = ss.r[i] * ss.r[j];
            for (std::size_t k = 0; k < m; ++k)
                for (std::size_t l = 0; l < m; ++l)
                    a(row, k * m + l) = (row == k * m + l ? 1.0 : 0.0) - ss.t(i, k) * ss.t(j, l);
        }
    const auto x = la::solve(a, b);
    la::Mat p(m, m);
    p.data = x;
    return p;
}

struct KfLoglik {
    double loglik = -std::numeric_limits<double>::infinity();
    double sigma2 = 0.0;
};

// Concentrated Gaussian log-likelihood of a zero-mean ARMA via the Kalman
// filter with exact stationary initialization.
KfLoglik arma_loglik(std::span<const double> z, const std::vector<double>& phi,
                     const std::vector<double>& theta) {
    const std::size_t n = z.size();
    const auto ss = build_state_space(phi, theta);
    const std::size_t m = ss.m;
    la::Mat p;
    try {
        p = stationary_covariance(ss);
    } catch (const std::runtime_error&) {
        return {};
    }
    std::vector<double> a(m, 0.0);

    double sum_v2f = 0.0, sum_logf = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double f = p(0, 0) + 1e-10;
        if (!(f > 0.0) || !std::isfinite(f)) return {};
        const double v = z[t] - a[0];
        sum_v2f += v * v / f;
        sum_logf += std::log(f);

        // Measurement update: K = P e0 / f.
        std::vector<double> k(m);
        for (std::size_t i = 0; i < m; ++i) k[i] = p(i, 0) / f;
        for (std::size_t i = 0; i < m; ++i) a[i] += k[i] * v;
        la::Mat p_upd = p;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) p_upd(i, j) -= k[i] * p(0, j);
        // Time update: a = T a; P = T P T' + R R'.
        std::vector<double> a_next(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) a_next[i] += ss.t(i, j) * a[j];
        a = std::move(a_next);
        la::Mat tp = la::mul(ss.t, p_upd);
        p = la::mul(tp, la::transpose(ss.t));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) p(i, j) += ss.r[i] * ss.r[j];
        la::symmetrize(p);
    }

    KfLoglik out;
    out.sigma2 = sum_v2f / static_cast<double>(n);
    if (!(out.sigma2 > 0.0) || !std::isfinite(out.sigma2)) return {};
    const double dn = static_cast<double>(n);
    out.loglik = -0.5 * dn * (std::log(2.0 * 3.14159265358979323846) + 1.0) -
                 0.5 * dn * std::log(out.sigma2) - 0.5 * sum_logf;
    return out;
}

std::vector<double> tanh_all(std::span<const double> u) {
    std::vector<double> r(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) r[i] = std::tanh(u[i]);
    return r;
}

}  // namespace

double ArimaModel::mean() const {
    double s = 0.0;
    for (double v : phi) s += v;
    return std::abs(1.0 - s) > 1e-12 ? c / (1.0 - s) : 0.0;
}

std::string ArimaModel::to_json() const {
    nlohmann::json j;
    j["p"] = p;
    j["d"] = d;
    j["q"] = q;
    j["with_constant"] = with_constant;
    j["c"] = c;
    j["phi"] = phi;
    j["theta"] = theta;
    j["sigma2"] = sigma2;
    j["loglik"] = loglik;
    j["aic"] = aic;
    return j.dump();
}

ArimaModel arima_fit(std::span<const double> series, int p, int d, int q,
                     bool with_constant) {
    if (p < 0 || d < 0 || q < 0) throw std::invalid_argument("arima_fit: negative order");
    const std::size_t n = series.size();
    if (n <= static_cast<std::size_t>(p + q + d + 2))
        throw std::invalid_argument("arima_fit: series too short for the requested order");

    const std::vector<double> w = difference(series, d);
    const double w_mean = mean_of(w);
    double w_scale = 0.0;
    for (double v : w) w_scale += (v - w_mean) * (v - w_mean);
    w_scale = std::sqrt(w_scale / static_cast<double>(w.size()));
    if (w_scale < 1e-300) w_scale = 1.0;

    // Parameter vector: [u_phi (p), u_theta (q), mu_scaled (0/1)].
    const std::size_t dim = static_cast<std::size_t>(p + q) + (with_constant ? 1 : 0);
    auto unpack = [&](const std::vector<double>& x, std::vector<double>& phi,
                      std::vector<double>& theta, double& mu) {
        phi = pacf_to_ar(tanh_all(std::span<const double>(x.data(), p)));
        const auto a = pacf_to_ar(tanh_all(std::span<const double>(x.data() + p, q)));
        theta.assign(q, 0.0);
        for (int j = 0; j < q; ++j) theta[j] = -a[j];
        mu = with_constant ? x[static_cast<std::size_t>(p + q)] * w_scale : 0.0;
    };

    auto negloglik = [&](const std::vector<double>& x) {
        std::vector<double> phi, theta;
        double mu = 0.0;
        unpack(x, phi, theta, mu);
        std::vector<double> z(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) z[i] = w[i] - mu;
        const auto ll = arma_loglik(z, phi, theta);
        return std::isfinite(ll.loglik) ? -ll.loglik : 1e30;
    };

    // Warm start: AR part from OLS on lags, MA at zero, mu at the mean.
    std::vector<double> x0(dim, 0.0);
    if (p > 0 && w.size() > static_cast<std::size_t>(2 * p + 2)) {
        try {
            const std::size_t rows = w.size() - p;
            la::Mat xm(rows, p);
            std::vector<double> yv(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                yv[r] = w[r + p] - w_mean;
                for (int j = 0; j < p; ++j) xm(r, j) = w[r + p - 1 - j] - w_mean;
            }
            la::Mat xtx(p, p);
            std::vector<double> xty(p, 0.0);
            for (std::size_t r = 0; r < rows; ++r)
                for (int a = 0; a < p; ++a) {
                    xty[a] += xm(r, a) * yv[r];
                    for (int b = 0; b < p; ++b) xtx(a, b) += xm(r, a) * xm(r, b);
                }
            const auto phi0 = la::solve(xtx, xty);
            const auto r0 = ar_to_pacf(phi0);
            for (int i = 0; i < p; ++i)
                x0[i] = std::atanh(std::clamp(r0[i], -0.97, 0.97));
        } catch (const std::runtime_error&) {
            // keep zeros
        }
    }
    if (with_constant) x0[dim - 1] = w_mean / w_scale;

    std::vector<double> best = x0;
    if (dim > 0) {
        auto run1 = optim::nelder_mead(negloglik, x0, 0.25, 400 * static_cast<int>(dim));
        auto run2 = optim::nelder_mead(negloglik, run1.x, 0.05, 400 * static_cast<int>(dim));
        best = run2.fx <= run1.fx ? run2.x : run1.x;
    }

    ArimaModel model;
    model.p = p;
    model.d = d;
    model.q = q;
    model.with_constant = with_constant;
    double mu = 0.0;
    unpack(best, model.phi, model.theta, mu);
    std::vector<double> z(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) z[i] = w[i] - mu;
    const auto ll = arma_loglik(z, model.phi, model.theta);
    if (!std::isfinite(ll.loglik))
        throw std::runtime_error("arima_fit: likelihood evaluation failed at optimum");
    model.sigma2 = ll.sigma2;
    model.loglik = ll.loglik;
    double phi_sum = 0.0;
    for (double v : model.phi) phi_sum += v;
    model.c = mu * (1.0 - phi_sum);
    const double k_params = static_cast<double>(p + q + (with_constant ? 1 : 0) + 1);
    model.aic = -2.0 * model.loglik + 2.0 * k_params;
    return model;
}

ArimaModel auto_arima(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 10) throw std::invalid_argument("auto_arima: need at least 10 points");

    // Choose d by repeated unit-root tests, capped at 2.
    int d = 0;
    std::vector<double> work(series.begin(), series.end());
    for (; d < 2; ++d) {
        const std::size_t lag = std::max<std::size_t>(1, std::min<std::size_t>(4, work.size() / 15));
        bool reject;
        try {
            reject = adf_test(work, lag).reject_unit_root;
        } catch (const std::exception&) {
            reject = false;  // degenerate regression: keep differencing
        }
        if (reject) break;
        work = difference(work, 1);
    }

    constexpr int max_order = 5;
    struct Key {
        int p, q;
        bool c;
        bool operator<(const Key& o) const {
            return std::tie(p, q, c) < std::tie(o.p, o.q, o.c);
        }
    };
    std::set<Key> tried;
    ArimaModel best;
    bool have_best = false;

    auto consider = [&](int p, int q, bool with_c) {
        if (p < 0 || q < 0 || p > max_order || q > max_order) return;
        if (n <= static_cast<std::size_t>(p + q + d + 2)) return;
        if (!tried.insert({p, q, with_c}).second) return;
        try {
            ArimaModel m = arima_fit(series, p, d, q, with_c);
            if (!have_best || m.aic < best.aic) {
                best = std::move(m);
                have_best = true;
            }
        } catch (const std::exception&) {
            // candidate rejected
        }
    };

    const std::vector<std::pair<int, int>> starts{{0, 0}, {1, 0}, {0, 1}, {2, 2}};
    for (const auto& [p, q] : starts) {
        consider(p, q, true);
        consider(p, q, false);
    }
    if (!have_best) throw std::runtime_error("auto_arima: every candidate failed to fit");

    for (int round = 0; round < 20; ++round) {
        const ArimaModel snapshot = best;
        consider(snapshot.p + 1, snapshot.q, snapshot.with_constant);
        consider(snapshot.p - 1, snapshot.q, snapshot.with_constant);
        consider(snapshot.p, snapshot.q + 1, snapshot.with_constant);
        consider(snapshot.p, snapshot.q - 1, snapshot.with_constant);
        consider(snapshot.p, snapshot.q, !snapshot.with_constant);
        if (best.p == snapshot.p && best.q == snapshot.q &&
            best.with_constant == snapshot.with_constant)
            break;
    }
    return best;
}

ts::ForecastResult arima_forecast(const ArimaModel& model, std::span<const double> history,
                                  std::size_t h) {
    if (h < 1) throw std::invalid_argument("arima_forecast: h must be >= 1");
    if (history.size() <= static_cast<std::size_t>(model.d))
        throw std::invalid_argument("arima_forecast: history shorter than d");

    const std::vector<double> w = difference(history, model.d);
    const double mu = model.mean();

    // In-sample innovations from the conditional recursion.
    const std::size_t nw = w.size();
    std::vector<double> z(nw);
    for (std::size_t i = 0; i < nw; ++i) z[i] = w[i] - mu;
    std::vector<double> eps(nw, 0.0);
    for (std::size_t t = 0; t < nw; ++t) {
        double pred = 0.0;
        for (int i = 0; i < model.p; ++i)
            if (t >= static_cast<std::size_t>(i + 1)) pred += model.phi[i] * z[t - 1 - i];
        for (int j = 0; j < model.q; ++j)
            if (t >= static_cast<std::size_t>(j + 1)) pred += model.theta[j] * eps[t - 1 - j];
        eps[t] = z[t] - pred;
    }

    // Forecast recursion: future innovations are zero.
    std::vector<double> zf = z, ef = eps;
    std::vector<double> w_fore;
    for (std::size_t s = 0; s < h; ++s) {
        double pred = 0.0;
        const std::size_t t = zf.size();
        for (int i = 0; i < model.p; ++i)
            if (t >= static_cast<std::size_t>(i + 1)) pred += model.phi[i] * zf[t - 1 - i];
        for (int j = 0; j < model.q; ++j)
            if (t >= static_cast<std::size_t>(j + 1)) pred += model.theta[j] * ef[t - 1 - j];
        zf.push_back(pred);
        ef.push_back(0.0);
        w_fore.push_back(pred + mu);
    }

    // Integrate the differencing back, seeding with the last observed levels.
    std::vector<std::vector<double>> partial(model.d + 1);
    partial[model.d] = w_fore;
    for (int k = model.d; k-- > 0;) {
        // prefix of order-k differences: reconstruct from the last value at
        // that differencing level.
        std::vector<double> tail;
        std::vector<double> dk = difference(history, k);
        double last = dk.back();
        for (double dv : partial[k + 1]) {
            last += dv;
            tail.push_back(last);
        }
        partial[k] = std::move(tail);
    }

    ts::ForecastResult result;
    result.origin_index = history.size() - 1;
    result.horizon = h;
    result.point = partial[0];
    return result;
}

// ---------------------------------------------------------------------------
// Holt
// ---------------------------------------------------------------------------

double holt_sse(std::span<const double> series, double alpha_s, double beta_s, double l0,
                double b0, std::vector<double>* one_step) {
    double l = l0, b = b0, sse = 0.0;
    if (one_step) one_step->clear();
    for (double y : series) {
        const double pred = l + b;
        if (one_step) one_step->push_back(pred);
        const double e = y - pred;
        sse += e * e;
        const double l_new = alpha_s * y + (1.0 - alpha_s) * (l + b);
        b = beta_s * (l_new - l) + (1.0 - beta_s) * b;
        l = l_new;
    }
    return sse;
}

HoltModel holt_fit(std::span<const double> series) {
    if (series.size() < 4) throw std::invalid_argument("holt_fit: need >= 4 points");
    const double l0 = series[0];
    const double b0 = series[1] - series[0];
    double scale = 0.0;
    for (double v : series) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) scale = 1.0;

    auto objective = [&](const std::vector<double>& x) {
        const double a = x[0], b = x[1];
        double penalty = 0.0;
        const double ac = std::clamp(a, 0.0, 1.0), bc = std::clamp(b, 0.0, 1.0);
        penalty += (a - ac) * (a - ac) + (b - bc) * (b - bc);
        return holt_sse(series, ac, bc, x[2] * scale, x[3] * scale) +
               penalty * scale * scale;
    };

    auto run = optim::nelder_mead(objective, {0.5, 0.5, l0 / scale, b0 / scale}, 0.2, 4000);
    run = optim::nelder_mead(objective, run.x, 0.02, 4000);
    if (!std::isfinite(run.fx)) throw std::runtime_error("holt_fit: optimizer failure");

    HoltModel model;
    model.alpha_s = std::clamp(run.x[0], 0.0, 1.0);
    model.beta_s = std::clamp(run.x[1], 0.0, 1.0);
    model.l0 = run.x[2] * scale;
    model.b0 = run.x[3] * scale;

    // Replay to get the final level/trend.
    double l = model.l0, b = model.b0;
    for (double y : series) {
        const double l_new = model.alpha_s * y + (1.0 - model.alpha_s) * (l + b);
        b = model.beta_s * (l_new - l) + (1.0 - model.beta_s) * b;
        l = l_new;
    }
    model.l = l;
    model.b = b;
    model.sse = holt_sse(series, model.alpha_s, model.beta_s, model.l0, model.b0);
    return model;
}

ts::ForecastResult holt_forecast(const HoltModel& model, std::size_t h) {
    if (h < 1) throw std::invalid_argument("holt_forecast: h must be >= 1");
    ts::ForecastResult result;
    result.horizon = h;
    for (std::size_t i = 1; i <= h; ++i)
        result.point.push_back(model.l + static_cast<double>(i) * model.b);
    return result;
}

std::string HoltModel::to_json() const {
    nlohmann::json j;
    j["alpha_s"] = alpha_s;
    j["beta_s"] = beta_s;
    j["l"] = l;
    j["b"] = b;
    j["l0"] = l0;
    j["b0"] = b0;
    j["sse"] = sse;
    return j.dump();
}

}  // namespace agebench::stat
