#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agebench/timeseries.hpp"

#include <cmath>

#include "agebench/rng.hpp"

using namespace agebench;

TEST_CASE("mape on identical sequences is zero") {
    const std::vector<double> y{1, 2, 3};
    CHECK(ts::mape(y, y) == 0.0);
}

TEST_CASE("mape hand-evaluated") {
    // 100/2 * (|2-1|/2 + |4-5|/4) = 50 * (0.5 + 0.25) = 37.5
    const std::vector<double> actual{2, 4}, predicted{1, 5};
    CHECK(ts::mape(actual, predicted) == doctest::Approx(37.5).epsilon(1e-12));
}

TEST_CASE("mape rejects zero actuals and bad input") {
    const std::vector<double> a{0, 1}, p{0, 1};
    CHECK_THROWS_AS(ts::mape(a, p), std::domain_error);
    const std::vector<double> b{1};
    CHECK_THROWS_AS(ts::mape(a, b), std::invalid_argument);
    const std::vector<double> nan{std::nan(""), 1};
    const std::vector<double> ok{1, 1};
    CHECK_THROWS_AS(ts::mape(nan, ok), std::invalid_argument);
}

TEST_CASE("mape is scale invariant") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> y(10), yh(10);
        for (int i = 0; i < 10; ++i) {
            y[i] = rng.uniform(0.5, 2.0);
            yh[i] = rng.uniform(0.5, 2.0);
        }
        const double c = rng.uniform(-3.0, 3.0);
        if (std::abs(c) < 1e-3) continue;
        std::vector<double> cy = y, cyh = yh;
        for (int i = 0; i < 10; ++i) {
            cy[i] *= c;
            cyh[i] *= c;
        }
        CHECK(ts::mape(cy, cyh) == doctest::Approx(ts::mape(y, yh)).epsilon(1e-10));
    }
}

namespace {

ts::DegradationTrace make_trace(std::size_t n) {
    ts::DegradationTrace t;
    t.id = "t";
    for (std::size_t i = 0; i < n; ++i) {
        t.times.push_back(double(i));
        t.values.push_back(double(i) * 0.1);
    }
    return t;
}

}  // namespace

TEST_CASE("split uses floor with minimum one point per side") {
    const auto t = make_trace(10);
    auto [train, test] = ts::split(t, {0.33});
    CHECK(train.size() == 3);
    CHECK(test.size() == 7);

    const auto t2 = make_trace(2);
    auto [a, b] = ts::split(t2, {0.5});
    CHECK(a.size() == 1);
    CHECK(b.size() == 1);

    CHECK_THROWS(ts::split(make_trace(1), {0.5}));
}

TEST_CASE("split then concatenate is the identity") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto t = make_trace(5 + rng.uniform_index(40));
        const double frac = rng.uniform(0.05, 0.95);
        auto [train, test] = ts::split(t, {frac});
        std::vector<double> times = train.times, values = train.values;
        times.insert(times.end(), test.times.begin(), test.times.end());
        values.insert(values.end(), test.values.begin(), test.values.end());
        CHECK(times == t.times);
        CHECK(values == t.values);
    }
}

TEST_CASE("append_values extends by the median interval") {
    ts::DegradationTrace t{"x", {0, 1, 2}, {0.0, 0.1, 0.2}};
    const auto t2 = ts::append_values(t, std::vector<double>{0.3});
    CHECK(t2.times == std::vector<double>{0, 1, 2, 3});

    ts::DegradationTrace u{"y", {0, 2, 4}, {0.0, 0.1, 0.2}};
    const auto u2 = ts::append_values(u, std::vector<double>{0.3, 0.4});
    CHECK(u2.times == std::vector<double>{0, 2, 4, 6, 8});

    const auto same = ts::append_values(u, std::vector<double>{});
    CHECK(same.times == u.times);
    CHECK(same.values == u.values);
}

TEST_CASE("trace csv round trip") {
    const auto t = make_trace(7);
    const auto text = ts::trace_to_csv(t);
    const auto back = ts::trace_from_csv(text, "t");
    CHECK(back.times == t.times);
    CHECK(back.values == t.values);
}

TEST_CASE("trace invariants enforced") {
    ts::DegradationTrace bad{"b", {0, 0}, {1, 2}};
    CHECK_THROWS(bad.validate());
    ts::DegradationTrace empty{"e", {}, {}};
    CHECK_THROWS(empty.validate());
}

TEST_CASE("forecast quantile crossing detected") {
    ts::ForecastResult f;
    f.horizon = 2;
    f.point = {1.0, 2.0};
    f.quantiles[0.1] = {1.0, 2.0};
    f.quantiles[0.9] = {0.5, 3.0};  // crosses at step 0
    CHECK_THROWS(f.validate());
    f.quantiles[0.9] = {1.5, 3.0};
    CHECK_NOTHROW(f.validate());
}
