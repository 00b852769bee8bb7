#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agebench/ingest.hpp"

#include <cmath>
#include <filesystem>

using namespace agebench;
using ingest::RawRecord;

namespace {

RawRecord rec(double t, double v_gs, double v_ds = 1.0, double i_d = 1.0, double t_f = 40.0) {
    return {t, v_gs, v_ds, i_d, t_f};
}

}  // namespace

TEST_CASE("segment_on_states finds maximal gate-on runs") {
    std::vector<RawRecord> rs{rec(0, 0), rec(1, 15), rec(2, 15), rec(3, 0), rec(4, 15)};
    ingest::PreprocessConfig cfg;
    cfg.gate_on_threshold = 7.5;
    const auto ranges = ingest::segment_on_states(rs, cfg);
    REQUIRE(ranges.size() == 2);
    CHECK(ranges[0].begin == 1);
    CHECK(ranges[0].end == 3);
    CHECK(ranges[1].begin == 4);
    CHECK(ranges[1].end == 5);
}

TEST_CASE("segment_on_states errors when everything is off") {
    std::vector<RawRecord> rs{rec(0, 0), rec(1, 0)};
    CHECK_THROWS(ingest::segment_on_states(rs, {}));
}

TEST_CASE("segment_on_states single full-file run") {
    std::vector<RawRecord> rs{rec(0, 15), rec(1, 15), rec(2, 15)};
    const auto ranges = ingest::segment_on_states(rs, {});
    REQUIRE(ranges.size() == 1);
    CHECK(ranges[0].begin == 0);
    CHECK(ranges[0].end == 3);
}

TEST_CASE("compute_rdson averages per-sample ratios") {
    std::vector<RawRecord> w1{rec(0, 15, 1.0, 2.0), rec(1, 15, 1.0, 2.0)};
    CHECK(ingest::compute_rdson(w1) == doctest::Approx(0.5));
    std::vector<RawRecord> w2{rec(0, 15, 1.0, 1.0), rec(1, 15, 2.0, 1.0)};
    CHECK(ingest::compute_rdson(w2) == doctest::Approx(1.5));
    std::vector<RawRecord> w3{rec(0, 15, 1.0, 0.0)};
    CHECK_THROWS_AS(ingest::compute_rdson(w3), std::domain_error);
}

TEST_CASE("synthesize_trace evaluates the growth law") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.noise_sigma = 0.0;
    cfg.duration = 10;
    const auto trace = ingest::synthesize_trace(cfg);
    CHECK(trace.values.front() == 0.0);
    CHECK(trace.values.back() ==
          doctest::Approx(0.01 * (std::exp(0.5) - 1.0)).epsilon(1e-12));
}

TEST_CASE("synthesize_trace is deterministic per seed") {
    ingest::SynthConfig cfg;
    cfg.noise_sigma = 1e-3;
    cfg.seed = 42;
    const auto a = ingest::synthesize_trace(cfg);
    const auto b = ingest::synthesize_trace(cfg);
    CHECK(a.values == b.values);
    cfg.seed = 43;
    const auto c = ingest::synthesize_trace(cfg);
    CHECK(a.values != c.values);
}

TEST_CASE("synthesize_raw produces 0.4 ms ON windows at the default drive") {
    ingest::SynthConfig cfg;
    cfg.duration = 0.01;  // one burst
    ingest::DriveConfig drive;
    drive.sample_rate = 1e6;
    const auto rs = ingest::synthesize_raw(cfg, drive);
    const auto ranges = ingest::segment_on_states(rs, {});
    REQUIRE(!ranges.empty());
    const auto& r0 = ranges.front();
    const double duration_s = rs[r0.end - 1].t - rs[r0.begin].t + 1.0 / drive.sample_rate;
    CHECK(duration_s == doctest::Approx(0.4e-3).epsilon(0.02));
}

TEST_CASE("constant resistance preprocesses to an all-zero trace") {
    ingest::SynthConfig cfg;
    cfg.beta = 1e-12;  // effectively no ageing
    cfg.alpha = 0.0;
    cfg.duration = 5;
    const auto rs = ingest::synthesize_raw(cfg, {});
    const auto trace = ingest::preprocess(rs, {});
    for (double v : trace.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("preprocess recovers the analytic ageing curve") {
    ingest::SynthConfig cfg;
    cfg.alpha = 0.01;
    cfg.beta = 0.05;
    cfg.duration = 30;
    const auto rs = ingest::synthesize_raw(cfg, {});
    const auto trace = ingest::preprocess(rs, {});
    REQUIRE(trace.size() >= 25);
    CHECK(trace.values.front() == 0.0);

    auto curve = [&](double t_min) { return cfg.alpha * std::expm1(cfg.beta * t_min); };
    const double final_dr = curve(trace.times.back());
    double max_err = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double expected = curve(trace.times[i]) - curve(trace.times.front());
        max_err = std::max(max_err, std::abs(trace.values[i] - expected));
    }
    CHECK(max_err < 0.01 * final_dr);
}

TEST_CASE("temperature filtering drops cold samples and can empty the set") {
    ingest::SynthConfig cfg;
    cfg.duration = 5;
    ingest::DriveConfig drive;
    drive.temp_base = 20.0;
    drive.temp_slope = 10.0;  // warms by 10 degC per minute
    const auto rs = ingest::synthesize_raw(cfg, drive);

    ingest::PreprocessConfig cold;
    cold.low_temp = 1000.0;
    CHECK_THROWS(ingest::preprocess(rs, cold));

    ingest::PreprocessConfig mid;
    mid.low_temp = 40.0;  // reached at t = 2 min
    const auto trace = ingest::preprocess(rs, mid);
    ingest::PreprocessConfig open;
    const auto full = ingest::preprocess(rs, open);
    CHECK(trace.size() < full.size());
}

TEST_CASE("raw csv round trip") {
    ingest::SynthConfig cfg;
    cfg.duration = 0.02;
    const auto rs = ingest::synthesize_raw(cfg, {});
    const auto path = std::filesystem::temp_directory_path() / "agebench_raw_test.csv";
    ingest::save_raw_csv(rs, path.string());
    const auto back = ingest::load_raw_csv(path.string());
    REQUIRE(back.size() == rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(back[i].t == rs[i].t);
        CHECK(back[i].v_gs == rs[i].v_gs);
        CHECK(back[i].v_ds == rs[i].v_ds);
        CHECK(back[i].i_d == rs[i].i_d);
        CHECK(back[i].t_f == rs[i].t_f);
    }
    std::filesystem::remove(path);
}

TEST_CASE("config json parsing") {
    const auto sc = ingest::synth_config_from_json(
        R"({"alpha":0.02,"beta":0.04,"duration":100,"noise_sigma":0.001,"seed":9})");
    CHECK(sc.alpha == 0.02);
    CHECK(sc.seed == 9);
    const auto pc = ingest::preprocess_config_from_json(
        R"({"gate_on_threshold":5.0,"low_temp":25.0,"min_on_samples":3})");
    CHECK(pc.low_temp == 25.0);
    CHECK(pc.min_on_samples == 3);
    CHECK_THROWS(ingest::synth_config_from_json(R"({"duration":-5})"));
}
