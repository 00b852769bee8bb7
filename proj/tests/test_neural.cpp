#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agebench/neural.hpp"

#include <algorithm>
#include <cmath>

#include "agebench/ingest.hpp"
#include "agebench/linalg.hpp"
#include "agebench/rng.hpp"
#include "agebench/stat_forecast.hpp"
#include "agebench/timeseries.hpp"

using namespace agebench;

namespace {

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y(n);
    double prev = 0.0;
    for (auto& v : y) {
        prev = phi * prev + rng.normal();
        v = prev;
    }
    return y;
}

std::vector<double> linear_series(std::size_t n, double a, double b) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = a + b * double(i);
    return y;
}

}  // namespace

TEST_CASE("select_lags keeps lag one and ranks ar(1) correctly") {
    const auto y = ar1(400, 0.8, 31);
    const auto spec = nn::select_lags(y, 6);
    REQUIRE(!spec.lags.empty());
    CHECK(spec.lags.front() == 1);
    // PACF oracle: lag 1 carries the largest absolute partial autocorrelation.
    const auto p = stat::pacf(y, 6);
    for (std::size_t k = 1; k < p.size(); ++k) CHECK(std::abs(p[0]) >= std::abs(p[k]));
}

TEST_CASE("select_lags on white noise keeps only the forced lag") {
    Rng rng(32);
    std::vector<double> y(500);
    for (auto& v : y) v = rng.normal();
    const auto spec = nn::select_lags(y, 5);
    // The 95% band admits the occasional spurious lag; lag 1 is always first.
    CHECK(spec.lags.front() == 1);
    CHECK(spec.lags.size() <= 2);
    CHECK_FALSE(spec.difference_first);
}

TEST_CASE("select_lags differences a trending series") {
    Rng rng(33);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = 0.3 * double(i) + rng.normal(0.0, 0.05);
    const auto spec = nn::select_lags(y, 5);
    CHECK(spec.difference_first);
}

TEST_CASE("select_lags guards short series") {
    std::vector<double> y(10, 1.0);
    CHECK_THROWS(nn::select_lags(y, 5));
}

TEST_CASE("mlp learns a noise-free linear series to within 1% on the tail") {
    const auto y = linear_series(80, 2.0, 3.0);
    nn::LagSpec spec;
    spec.lags = {1};
    spec.difference_first = true;
    const auto model = nn::train_mlp_fixed(
        std::span<const double>(y).subspan(0, 60), spec, 4, 7);
    std::vector<double> actual, predicted;
    std::vector<double> history(y.begin(), y.begin() + 60);
    for (std::size_t i = 60; i < y.size(); ++i) {
        predicted.push_back(model.net.predict_next(history));
        actual.push_back(y[i]);
        history.push_back(y[i]);
    }
    CHECK(ts::mape(actual, predicted) < 1.0);
}

TEST_CASE("mlp on a constant series forecasts the constant") {
    std::vector<double> y(50, 2.5);
    nn::LagSpec spec;
    spec.lags = {1};
    const auto model = nn::train_mlp_fixed(y, spec, 3, 11);
    CHECK(model.net.predict_next(y) == doctest::Approx(2.5).epsilon(1e-6));
}

TEST_CASE("mlp training is deterministic per seed") {
    const auto y = ar1(120, 0.6, 35);
    nn::LagSpec spec;
    spec.lags = {1, 2};
    const auto a = nn::train_mlp_fixed(y, spec, 5, 99);
    const auto b = nn::train_mlp_fixed(y, spec, 5, 99);
    CHECK(a.net.w1.data == b.net.w1.data);
    CHECK(a.net.w2 == b.net.w2);
    CHECK(a.net.b2 == b.net.b2);
    const auto c = nn::train_mlp_fixed(y, spec, 5, 100);
    CHECK(a.net.w1.data != c.net.w1.data);
}

TEST_CASE("elm with zero penalty matches ordinary least squares") {
    // A well-conditioned design (three lags, three hidden units) so the
    // coefficient comparison is numerically meaningful.
    const auto y = ar1(300, 0.5, 36);
    nn::LagSpec spec;
    spec.lags = {1, 2, 3};
    const auto elm = nn::train_elm(y, spec, 3, 0.0, 21);

    // Independent OLS on the same hidden activations via normal equations.
    // Rebuild activations with the same frozen input weights.
    std::vector<double> z;
    for (std::size_t i = 0; i < y.size(); ++i) z.push_back(y[i]);
    const auto& net = elm.net;
    const std::size_t m = spec.max_lag();
    std::vector<std::vector<double>> h;
    std::vector<double> target;
    for (std::size_t t = m; t < z.size(); ++t) {
        std::vector<double> row(net.hidden_count);
        for (std::size_t k = 0; k < net.hidden_count; ++k) {
            double a = net.b1[k];
            for (std::size_t j = 0; j < spec.lags.size(); ++j)
                a += net.w1(k, j) * (z[t - spec.lags[j]] - net.norm_mean) / net.norm_std;
            row[k] = 1.0 / (1.0 + std::exp(-a));
        }
        h.push_back(row);
        target.push_back((z[t] - net.norm_mean) / net.norm_std);
    }
    const std::size_t nh = net.hidden_count, rows = h.size();
    la::Mat xtx(nh + 1, nh + 1);
    std::vector<double> xty(nh + 1, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> row = h[r];
        row.push_back(1.0);
        for (std::size_t a = 0; a <= nh; ++a) {
            xty[a] += row[a] * target[r];
            for (std::size_t b = 0; b <= nh; ++b) xtx(a, b) += row[a] * row[b];
        }
    }
    const auto beta = la::solve(xtx, xty);
    for (std::size_t k = 0; k < nh; ++k)
        CHECK(net.w2[k] == doctest::Approx(beta[k]).epsilon(1e-6));
    CHECK(net.b2 == doctest::Approx(beta[nh]).epsilon(1e-6));
}

TEST_CASE("elm with huge penalty shrinks all output weights to zero") {
    const auto y = ar1(150, 0.5, 37);
    nn::LagSpec spec;
    spec.lags = {1};
    const auto elm = nn::train_elm(y, spec, 6, 1e6, 22);
    for (double w : elm.net.w2) CHECK(w == 0.0);
    // Forecast equals the (denormalized) intercept.
    const double pred = elm.net.predict_next(y);
    CHECK(pred ==
          doctest::Approx(elm.net.b2 * elm.net.norm_std + elm.net.norm_mean).epsilon(1e-12));
}

TEST_CASE("elm capacity on a noise-free growth curve") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 120;
    const auto trace = ingest::synthesize_trace(cfg);
    nn::LagSpec spec;
    spec.lags = {1, 2};
    spec.difference_first = true;
    const std::size_t split = 100;
    const auto elm = nn::train_elm(
        std::span<const double>(trace.values).subspan(0, split), spec, 20, 1e-6, 5);
    std::vector<double> actual, predicted;
    std::vector<double> history(trace.values.begin(), trace.values.begin() + split);
    for (std::size_t i = split; i < trace.size(); ++i) {
        predicted.push_back(elm.net.predict_next(history));
        actual.push_back(trace.values[i]);
        history.push_back(trace.values[i]);
    }
    CHECK(ts::mape(actual, predicted) < 2.0);
}

TEST_CASE("median combiner is robust and permutation invariant") {
    CHECK(nn::median_of({1.0, 2.0, 100.0}) == 2.0);
    CHECK(nn::median_of({100.0, 1.0, 2.0}) == 2.0);
    CHECK(nn::median_of({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
}

TEST_CASE("ensemble of identical members equals the member forecast") {
    const auto y = ar1(120, 0.6, 38);
    nn::LagSpec spec;
    spec.lags = {1};
    const auto one = nn::train_elm(y, spec, 8, 1e-3, 77);
    nn::EnsembleForecaster ens;
    ens.kind = nn::MemberKind::Elm;
    ens.members.assign(5, one.net);
    const auto fc = nn::ensemble_forecast(ens, y, 4);
    const auto single = nn::forecast_recursive(one.net, y, 4);
    CHECK(fc.point == single.point);
}

TEST_CASE("recursive forecast of an exact-linear model continues the line") {
    const auto y = linear_series(60, 1.0, 2.0);
    nn::LagSpec spec;
    spec.lags = {1};
    spec.difference_first = true;
    const auto model = nn::train_mlp_fixed(y, spec, 3, 13);
    const auto fc = nn::forecast_recursive(model.net, y, 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const double expected = 1.0 + 2.0 * double(59 + i + 1);
        CHECK(fc.point[i] == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("h=1 recursive forecast equals a single model evaluation") {
    const auto y = ar1(100, 0.4, 39);
    nn::LagSpec spec;
    spec.lags = {1};
    const auto model = nn::train_elm(y, spec, 5, 1e-3, 3);
    const auto fc = nn::forecast_recursive(model.net, y, 1);
    CHECK(fc.point[0] == model.net.predict_next(y));
}

TEST_CASE("ensemble beats or matches the median individual on synthetic data (seeded)") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 100;
    cfg.noise_sigma = 2e-3;
    cfg.seed = 17;
    const auto trace = ingest::synthesize_trace(cfg);
    const std::size_t split = 80;
    const std::size_t h = trace.size() - split;
    std::vector<double> actual(trace.values.begin() + split, trace.values.end());
    const std::vector<double> train(trace.values.begin(), trace.values.begin() + split);

    nn::LagSpec spec;
    spec.lags = {1, 2};
    spec.difference_first = true;

    nn::EnsembleConfig cfg2;
    cfg2.hidden_count = 10;
    cfg2.l1_penalty = 1e-3;
    const auto ens = nn::train_ensemble(train, spec, nn::MemberKind::Elm, cfg2, 55);
    const auto ens_fc = nn::ensemble_forecast(ens, train, h);
    const double ens_mape = ts::mape(actual, ens_fc.point);

    std::vector<double> member_mapes;
    for (const auto& member : ens.members) {
        const auto fc = nn::forecast_recursive(member, train, h);
        member_mapes.push_back(ts::mape(actual, fc.point));
    }
    const double median_member = nn::median_of(member_mapes);
    CHECK(ens_mape <= median_member + 0.5);
}

TEST_CASE("train_ensemble produces 20 members by default differing only by seed") {
    const auto y = ar1(150, 0.5, 40);
    nn::LagSpec spec;
    spec.lags = {1};
    nn::EnsembleConfig cfg;
    cfg.hidden_count = 6;
    const auto ens = nn::train_ensemble(y, spec, nn::MemberKind::Elm, cfg, 5);
    CHECK(ens.members.size() == 20);
    CHECK(ens.members[0].w1.data != ens.members[1].w1.data);
    const auto again = nn::train_ensemble(y, spec, nn::MemberKind::Elm, cfg, 5);
    for (std::size_t i = 0; i < ens.members.size(); ++i)
        CHECK(ens.members[i].w2 == again.members[i].w2);
}

TEST_CASE("normalization round trip is exact") {
    const auto y = ar1(100, 0.3, 41);
    nn::LagSpec spec;
    spec.lags = {1};
    const auto model = nn::train_elm(y, spec, 4, 1e-3, 9);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const double v = rng.uniform(-5.0, 5.0);
        const double z = (v - model.net.norm_mean) / model.net.norm_std;
        CHECK(z * model.net.norm_std + model.net.norm_mean ==
              doctest::Approx(v).epsilon(1e-12));
    }
}
