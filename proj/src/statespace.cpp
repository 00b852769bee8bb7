#include "agebench/statespace.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "agebench/optim.hpp"

namespace agebench::statespace {

void NoiseConfig::validate() const {
    if (process_sigma <= 0.0 || measurement_sigma <= 0.0)
        throw std::invalid_argument("noise config: sigmas must be > 0");
    if (ukf.a <= 0.0) throw std::invalid_argument("noise config: ukf a must be > 0");
}

FilterState FilterState::initial(double r0, const DegradationParams& params,
                                 const std::array<double, 3>& p0_diag) {
    FilterState s;
    s.x_hat = {r0, params.alpha, params.beta};
    for (int i = 0; i < 3; ++i) s.p(i, i) = p0_diag[i];
    return s;
}

double model_step(double r, const DegradationParams& params, Variant variant) {
    double out;
    if (variant == Variant::A)
        out = r * (1.0 + params.beta) + params.alpha * params.beta;
    else
        out = r * (1.0 + params.beta) - params.r_init * params.beta;
    if (!std::isfinite(out)) throw std::runtime_error("model_step: non-finite result");
    return out;
}

FitResult fit_initial_params(const ts::DegradationTrace& train) {
    return fit_initial_params(std::span<const double>(train.values));
}

FitResult fit_initial_params(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 4) throw std::invalid_argument("fit_initial_params: need >= 4 points");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-14 * (std::abs(hi) + 1.0))
        throw std::runtime_error("fit_initial_params: degenerate constant input");

    // For fixed beta the optimal alpha is closed-form, so the search is 1-D.
    auto sse_for = [&](double beta, double* alpha_out) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = std::expm1(beta * static_cast<double>(i));
            num += values[i] * g;
            den += g * g;
        }
        const double alpha = den > 0.0 ? num / den : 0.0;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = values[i] - alpha * std::expm1(beta * static_cast<double>(i));
            sse += e * e;
        }
        if (alpha_out) *alpha_out = alpha;
        return sse;
    };

    const double beta_max = std::min(1.0, 500.0 / static_cast<double>(n));
    const double beta_min = 1e-8;
    // Coarse log-spaced scan, then golden-section refinement around the best.
    double best_beta = beta_min, best_sse = sse_for(beta_min, nullptr);
    const int grid = 200;
    for (int i = 1; i <= grid; ++i) {
        const double b = beta_min * std::pow(beta_max / beta_min, double(i) / grid);
        const double s = sse_for(b, nullptr);
        if (s < best_sse) {
            best_sse = s;
            best_beta = b;
        }
    }
    const double lo_b = best_beta / 1.6, hi_b = std::min(beta_max, best_beta * 1.6);
    const double beta =
        optim::golden_section([&](double b) { return sse_for(b, nullptr); }, lo_b, hi_b, 1e-14);

    FitResult result;
    double alpha = 0.0;
    const double sse = sse_for(beta, &alpha);
    if (!std::isfinite(sse)) throw std::runtime_error("fit_initial_params: non-convergence");
    result.params.alpha = alpha;
    result.params.beta = beta;
    result.residual_norm = std::sqrt(sse);
    return result;
}

namespace {

// f maps the augmented state [r, a, b] through the transition law; the
// degradation parameters ride along as random-walk states.
inline std::array<double, 3> propagate(const std::array<double, 3>& x, Variant variant,
                                       double r_init) {
    DegradationParams p{x[1], x[2], r_init};
    return {model_step(x[0], p, variant), x[1], x[2]};
}

inline double measure(const std::array<double, 3>& x, Variant variant, double r_init) {
    return variant == Variant::A ? x[0] : x[0] - r_init;
}

la::Mat jacobian(const std::array<double, 3>& x, Variant variant, double r_init) {
    la::Mat a = la::Mat::identity(3);
    a(0, 0) = 1.0 + x[2];
    if (variant == Variant::A) {
        a(0, 1) = x[2];
        a(0, 2) = x[0] + x[1];
    } else {
        a(0, 1) = 0.0;
        a(0, 2) = x[0] - r_init;
    }
    return a;
}

la::Mat process_noise(const NoiseConfig& noise) {
    la::Mat q(3, 3);
    const double w2 = noise.process_sigma * noise.process_sigma;
    for (int i = 0; i < 3; ++i) q(i, i) = w2;
    return q;
}

}  // namespace

FilterState ekf_step(const FilterState& state, double z, const NoiseConfig& noise,
                     Variant variant, double r_init) {
    noise.validate();
    // Time update: project the state ahead and the error covariance with the
    // Jacobian of the transition law at the current estimate.
    const std::array<double, 3> x_pred = propagate(state.x_hat, variant, r_init);
    const la::Mat a = jacobian(state.x_hat, variant, r_init);
    la::Mat p_pred = la::add(la::mul(la::mul(a, state.p), la::transpose(a)),
                             process_noise(noise));

    // Measurement update with H selecting the delta-R component.
    const double s = p_pred(0, 0) + noise.measurement_sigma * noise.measurement_sigma;
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::runtime_error("ekf_step: singular innovation covariance");
    const double innovation = z - measure(x_pred, variant, r_init);
    std::array<double, 3> k{p_pred(0, 0) / s, p_pred(1, 0) / s, p_pred(2, 0) / s};

    FilterState out;
    for (int i = 0; i < 3; ++i) out.x_hat[i] = x_pred[i] + k[i] * innovation;
    la::Mat ikh = la::Mat::identity(3);
    for (int i = 0; i < 3; ++i) ikh(i, 0) -= k[i];
    out.p = la::mul(ikh, p_pred);
    la::symmetrize(out.p);
    return out;
}

std::vector<std::vector<double>> sigma_points(std::span<const double> mean, const la::Mat& p,
                                              double n_plus_lambda) {
    const std::size_t n = mean.size();
    if (p.rows != n || p.cols != n) throw std::invalid_argument("sigma_points: shape");
    la::Mat scaled = p;
    for (double& v : scaled.data) v *= n_plus_lambda;

    la::Mat root;
    bool ok = false;
    double jitter = 1e-12;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
        try {
            root = la::cholesky(scaled);
            ok = true;
        } catch (const std::runtime_error&) {
            if (attempt == 3) throw;
            for (std::size_t i = 0; i < n; ++i) scaled(i, i) += jitter * n_plus_lambda;
            jitter *= 10.0;
        }
    }

    std::vector<std::vector<double>> points(2 * n + 1, std::vector<double>(mean.begin(),
                                                                           mean.end()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            points[1 + i][j] += root(j, i);
            points[1 + n + i][j] -= root(j, i);
        }
    return points;
}

FilterState ukf_step(const FilterState& state, double z, const NoiseConfig& noise,
                     Variant variant, double r_init) {
    noise.validate();
    constexpr std::size_t n = 3;
    const double lambda = noise.ukf.a * noise.ukf.a * (n + noise.ukf.kappa) - n;
    const double npl = n + lambda;

    auto points = sigma_points(state.x_hat, state.p, npl);

    std::vector<double> wm(2 * n + 1, 1.0 / (2.0 * npl));
    std::vector<double> wc = wm;
    wm[0] = lambda / npl;
    wc[0] = lambda / npl + (1.0 - noise.ukf.a * noise.ukf.a + noise.ukf.b);

    // Propagate through the transition law.
    std::vector<std::array<double, 3>> fx(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        fx[i] = propagate({points[i][0], points[i][1], points[i][2]}, variant, r_init);

    std::array<double, 3> x_pred{0, 0, 0};
    for (std::size_t i = 0; i < fx.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) x_pred[j] += wm[i] * fx[i][j];

    la::Mat p_pred = process_noise(noise);
    for (std::size_t i = 0; i < fx.size(); ++i)
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                p_pred(r, c) += wc[i] * (fx[i][r] - x_pred[r]) * (fx[i][c] - x_pred[c]);

    // Measurement statistics from the propagated sigma set.
    std::vector<double> zi(fx.size());
    double z_pred = 0.0;
    for (std::size_t i = 0; i < fx.size(); ++i) {
        zi[i] = measure(fx[i], variant, r_init);
        z_pred += wm[i] * zi[i];
    }
    double s = noise.measurement_sigma * noise.measurement_sigma;
    std::array<double, 3> cross{0, 0, 0};
    for (std::size_t i = 0; i < fx.size(); ++i) {
        const double dz = zi[i] - z_pred;
        s += wc[i] * dz * dz;
        for (std::size_t j = 0; j < n; ++j) cross[j] += wc[i] * (fx[i][j] - x_pred[j]) * dz;
    }
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::runtime_error("ukf_step: singular innovation covariance");

    FilterState out;
    const double innovation = z - z_pred;
    for (std::size_t j = 0; j < n; ++j) out.x_hat[j] = x_pred[j] + cross[j] / s * innovation;
    out.p = p_pred;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) out.p(r, c) -= cross[r] * cross[c] / s;
    la::symmetrize(out.p);
    return out;
}

ts::ForecastResult forecast_filter(const FilterState& state, std::size_t n, Variant variant,
                                   double r_init) {
    if (n < 1) throw std::invalid_argument("forecast_filter: n must be >= 1");
    ts::ForecastResult result;
    result.horizon = n;
    DegradationParams params{state.x_hat[1], state.x_hat[2], r_init};
    double r = state.x_hat[0];
    for (std::size_t i = 0; i < n; ++i) {
        r = model_step(r, params, variant);
        if (!std::isfinite(r)) throw std::runtime_error("forecast_filter: trajectory blow-up");
        result.point.push_back(variant == Variant::A ? r : r - r_init);
    }
    return result;
}

FilterRun run_filter(std::span<const double> measurements, const FilterState& init,
                     const NoiseConfig& noise, FilterKind kind, Variant variant,
                     double r_init) {
    FilterRun run;
    run.state = init;
    for (std::size_t i = 0; i < measurements.size(); ++i) {
        if (i > 0) {
            const auto pred = propagate(run.state.x_hat, variant, r_init);
            run.one_step_preds.push_back(measure(pred, variant, r_init));
        }
        run.state = kind == FilterKind::Ekf
                        ? ekf_step(run.state, measurements[i], noise, variant, r_init)
                        : ukf_step(run.state, measurements[i], noise, variant, r_init);
    }
    return run;
}

FilterInit filter_init_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    FilterInit init;
    init.noise.process_sigma = j.value("process_sigma", init.noise.process_sigma);
    init.noise.measurement_sigma = j.value("measurement_sigma", init.noise.measurement_sigma);
    if (j.contains("ukf")) {
        const auto& u = j.at("ukf");
        init.noise.ukf.a = u.value("a", init.noise.ukf.a);
        init.noise.ukf.b = u.value("b", init.noise.ukf.b);
        init.noise.ukf.kappa = u.value("kappa", init.noise.ukf.kappa);
    }
    if (j.contains("x0")) {
        const auto v = j.at("x0").get<std::vector<double>>();
        if (v.size() != 3) throw std::invalid_argument("filter init: x0 must have 3 entries");
        for (int i = 0; i < 3; ++i) init.x0[i] = v[i];
        init.has_x0 = true;
    }
    if (j.contains("p0")) {
        const auto v = j.at("p0").get<std::vector<double>>();
        if (v.size() != 3) throw std::invalid_argument("filter init: p0 must have 3 entries");
        for (int i = 0; i < 3; ++i) init.p0[i] = v[i];
    }
    init.noise.validate();
    return init;
}

}  // namespace agebench::statespace
