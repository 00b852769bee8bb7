#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agebench/statespace.hpp"

#include <cmath>

#include "agebench/ingest.hpp"
#include "agebench/rng.hpp"
#include "agebench/timeseries.hpp"

using namespace agebench;
using statespace::DegradationParams;
using statespace::FilterKind;
using statespace::FilterState;
using statespace::NoiseConfig;
using statespace::Variant;

TEST_CASE("model_step variant A") {
    DegradationParams p{0.5, 0.1, 0.0};
    CHECK(statespace::model_step(1.0, p, Variant::A) == doctest::Approx(1.15));
    p.beta = 0.0;
    CHECK(statespace::model_step(1.0, p, Variant::A) == 1.0);
}

TEST_CASE("model_step variant B") {
    DegradationParams p{0.0, 0.1, 0.2};
    CHECK(statespace::model_step(1.0, p, Variant::B) == doctest::Approx(1.08));
}

TEST_CASE("variants coincide when alpha equals minus r_init") {
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        const double beta = rng.uniform(-0.5, 0.5);
        const double r_init = rng.uniform(0.01, 2.0);
        const double r = rng.uniform(-1.0, 3.0);
        DegradationParams pa{-r_init, beta, 0.0};
        DegradationParams pb{0.0, beta, r_init};
        CHECK(statespace::model_step(r, pa, Variant::A) ==
              doctest::Approx(statespace::model_step(r, pb, Variant::B)).epsilon(1e-12));
    }
}

TEST_CASE("fit_initial_params recovers noise-free parameters") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 80;
    const auto trace = ingest::synthesize_trace(cfg);
    const auto fit = statespace::fit_initial_params(trace);
    CHECK(fit.params.alpha == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(fit.params.beta == doctest::Approx(0.05).epsilon(1e-6));
}

TEST_CASE("fit_initial_params rejects constant input") {
    std::vector<double> flat(20, 0.7);
    CHECK_THROWS(statespace::fit_initial_params(flat));
}

TEST_CASE("fit_initial_params tolerates noise (seeded)") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 120;
    cfg.noise_sigma = 1e-4;
    cfg.seed = 5;
    const auto trace = ingest::synthesize_trace(cfg);
    const auto fit = statespace::fit_initial_params(trace);
    CHECK(fit.params.alpha == doctest::Approx(0.01).epsilon(0.05));
    CHECK(fit.params.beta == doctest::Approx(0.05).epsilon(0.05));
}

TEST_CASE("ekf zero innovation keeps the predicted mean") {
    NoiseConfig noise;
    FilterState s = FilterState::initial(0.5, {0.01, 0.05, 0.0}, {1e-4, 1e-4, 1e-4});
    DegradationParams p{s.x_hat[1], s.x_hat[2], 0.0};
    const double predicted = statespace::model_step(s.x_hat[0], p, Variant::A);
    const auto out = statespace::ekf_step(s, predicted, noise);
    CHECK(out.x_hat[0] == doctest::Approx(predicted).epsilon(1e-12));
}

TEST_CASE("uninformative measurement leaves the prior") {
    NoiseConfig noise;
    noise.measurement_sigma = 1e6;
    FilterState s = FilterState::initial(0.5, {0.01, 0.05, 0.0}, {1e-6, 1e-6, 1e-6});
    DegradationParams p{0.01, 0.05, 0.0};
    const double predicted = statespace::model_step(0.5, p, Variant::A);
    const auto out = statespace::ekf_step(s, predicted + 10.0, noise);
    CHECK(out.x_hat[0] == doctest::Approx(predicted).epsilon(1e-6));
}

TEST_CASE("sigma points: zero covariance collapses to the mean") {
    const std::vector<double> mean{0.4, 0.01, 0.05};
    const la::Mat p(3, 3);
    const auto pts = statespace::sigma_points(mean, p, 0.03);
    REQUIRE(pts.size() == 7);
    for (const auto& pt : pts)
        for (int i = 0; i < 3; ++i) CHECK(pt[i] == mean[i]);
}

TEST_CASE("sigma points: 1-d hand case") {
    // n = 1, lambda = 2 -> points at 0, +sqrt(3), -sqrt(3).
    const std::vector<double> mean{0.0};
    la::Mat p(1, 1);
    p(0, 0) = 1.0;
    const auto pts = statespace::sigma_points(mean, p, 3.0);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0][0] == 0.0);
    CHECK(pts[1][0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(pts[2][0] == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("ekf and ukf agree in the linear regime") {
    // beta = 0 with zero variance on beta keeps the transition affine.
    NoiseConfig noise;
    noise.process_sigma = 1e-6;
    Rng rng(17);
    FilterState ekf = FilterState::initial(0.2, {0.01, 0.0, 0.0}, {1e-4, 1e-4, 0.0});
    FilterState ukf = ekf;
    for (int k = 0; k < 50; ++k) {
        const double z = 0.2 + rng.normal(0.0, 0.005);
        ekf = statespace::ekf_step(ekf, z, noise);
        ukf = statespace::ukf_step(ukf, z, noise);
        for (int i = 0; i < 3; ++i)
            CHECK(ekf.x_hat[i] == doctest::Approx(ukf.x_hat[i]).epsilon(1e-6));
    }
}

TEST_CASE("covariance stays symmetric PSD through filtering") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 100;
    cfg.noise_sigma = 2e-3;
    cfg.seed = 2;
    const auto trace = ingest::synthesize_trace(cfg);
    NoiseConfig noise;
    for (FilterKind kind : {FilterKind::Ekf, FilterKind::Ukf}) {
        FilterState s = FilterState::initial(trace.values[0], {0.01, 0.05, 0.0},
                                             {1e-4, 1e-4, 1e-4});
        for (double z : trace.values) {
            s = kind == FilterKind::Ekf ? statespace::ekf_step(s, z, noise)
                                        : statespace::ukf_step(s, z, noise);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    CHECK(s.p(i, j) == doctest::Approx(s.p(j, i)).epsilon(1e-9));
            CHECK(la::min_eigenvalue_sym(s.p) >= -1e-9);
        }
    }
}

TEST_CASE("filters track noise-free synthetic parameters") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 200;
    const auto trace = ingest::synthesize_trace(cfg);
    const auto init_fit = statespace::fit_initial_params(
        std::span<const double>(trace.values).subspan(0, 60));
    NoiseConfig noise;
    FilterState init = FilterState::initial(trace.values[0], init_fit.params,
                                            {1e-4, 1e-4, 1e-4});
    const auto run =
        statespace::run_filter(trace.values, init, noise, FilterKind::Ekf);
    CHECK(run.state.x_hat[1] == doctest::Approx(0.01).epsilon(0.10));
    CHECK(run.state.x_hat[2] == doctest::Approx(0.05).epsilon(0.10));
}

TEST_CASE("one-step prediction error shrinks after burn-in (10 seeds)") {
    NoiseConfig noise;
    constexpr int seeds = 10;
    constexpr std::size_t burn = 20, block = 20;
    std::vector<std::vector<double>> errs(seeds);
    std::size_t min_len = SIZE_MAX;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(100 + s);
        ingest::SynthConfig cfg;
        cfg.alpha = 0.01 * rng.uniform(0.8, 1.2);
        cfg.beta = 0.05 * rng.uniform(0.9, 1.1);
        cfg.duration = 120;
        const auto trace = ingest::synthesize_trace(cfg);
        const auto fit0 = statespace::fit_initial_params(
            std::span<const double>(trace.values).subspan(0, 40));
        FilterState init = FilterState::initial(trace.values[0], fit0.params,
                                                {1e-4, 1e-4, 1e-4});
        const auto run =
            statespace::run_filter(trace.values, init, noise, FilterKind::Ukf);
        std::vector<double> e;
        for (std::size_t i = 0; i < run.one_step_preds.size(); ++i)
            e.push_back(std::abs(run.one_step_preds[i] - trace.values[i + 1]) /
                        trace.values[i + 1]);
        errs[s] = e;
        min_len = std::min(min_len, e.size());
    }
    // Relative error averaged over seeds and 20-step blocks decays
    // monotonically after burn-in.
    double prev = 1e300;
    for (std::size_t b0 = burn; b0 + block <= min_len; b0 += block) {
        double m = 0.0;
        std::size_t count = 0;
        for (int s = 0; s < seeds; ++s)
            for (std::size_t i = b0; i < b0 + block; ++i) {
                m += errs[s][i];
                ++count;
            }
        m /= double(count);
        CHECK(m <= prev * (1.0 + 1e-9));
        prev = m;
    }
}

TEST_CASE("forecast_filter iterates the transition with frozen parameters") {
    FilterState s = FilterState::initial(0.5, {0.01, 0.0, 0.0}, {0, 0, 0});
    const auto flat = statespace::forecast_filter(s, 5);
    for (double v : flat.point) CHECK(v == 0.5);

    FilterState s2 = FilterState::initial(0.5, {0.01, 0.05, 0.0}, {0, 0, 0});
    const auto one = statespace::forecast_filter(s2, 1);
    DegradationParams p{0.01, 0.05, 0.0};
    CHECK(one.point[0] == statespace::model_step(0.5, p, Variant::A));
}

TEST_CASE("filter forecast continues the analytic curve") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 150;
    const auto trace = ingest::synthesize_trace(cfg);
    const std::size_t split = 120;
    const auto fit0 = statespace::fit_initial_params(
        std::span<const double>(trace.values).subspan(0, split));
    NoiseConfig noise;
    FilterState init = FilterState::initial(trace.values[0], fit0.params,
                                            {1e-4, 1e-4, 1e-4});
    const auto run = statespace::run_filter(
        std::span<const double>(trace.values).subspan(0, split), init, noise,
        FilterKind::Ukf);
    const auto fc = statespace::forecast_filter(run.state, 4);
    for (int i = 0; i < 4; ++i) {
        const double expected = trace.values[split + i];
        CHECK(std::abs(fc.point[i] - expected) / expected < 0.005);
    }
}

TEST_CASE("filter init json") {
    const auto init = statespace::filter_init_from_json(
        R"({"process_sigma":0.003,"measurement_sigma":0.02,
            "ukf":{"a":0.2,"b":2.5,"kappa":1.0},
            "x0":[0.1,0.01,0.05],"p0":[1e-3,1e-4,1e-5]})");
    CHECK(init.noise.process_sigma == 0.003);
    CHECK(init.noise.ukf.b == 2.5);
    CHECK(init.has_x0);
    CHECK(init.x0[2] == 0.05);
    CHECK(init.p0[2] == 1e-5);
}
