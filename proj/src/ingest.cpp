#include "agebench/ingest.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "agebench/rng.hpp"

namespace agebench::ingest {

void PreprocessConfig::validate() const {
    if (gate_on_threshold <= 0.0)
        throw std::invalid_argument("preprocess config: gate_on_threshold must be > 0");
    if (aggregation_window <= 0.0)
        throw std::invalid_argument("preprocess config: aggregation_window must be > 0");
    if (min_on_samples < 1)
        throw std::invalid_argument("preprocess config: min_on_samples must be >= 1");
}

void SynthConfig::validate() const {
    if (duration <= 0.0) throw std::invalid_argument("synth config: duration must be > 0");
    if (noise_sigma < 0.0) throw std::invalid_argument("synth config: noise_sigma must be >= 0");
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(r_init))
        throw std::invalid_argument("synth config: non-finite parameter");
}

void DriveConfig::validate() const {
    if (gate_voltage <= 0 || pwm_frequency <= 0 || duty_cycle <= 0 || duty_cycle >= 1 ||
        drain_bias <= 0 || load_ohms <= 0 || sample_rate <= 0 || burst_interval <= 0 ||
        burst_cycles < 1)
        throw std::invalid_argument("drive config: parameters must be positive");
}

std::vector<IndexRange> segment_on_states(std::span<const RawRecord> records,
                                          const PreprocessConfig& config) {
    config.validate();
    if (records.empty()) throw std::invalid_argument("segment_on_states: empty input");

    std::vector<IndexRange> ranges;
    std::size_t run_start = 0;
    bool in_run = false;
    for (std::size_t i = 0; i <= records.size(); ++i) {
        const bool on = i < records.size() && records[i].v_gs >= config.gate_on_threshold;
        if (on && !in_run) {
            run_start = i;
            in_run = true;
        } else if (!on && in_run) {
            if (i - run_start >= static_cast<std::size_t>(config.min_on_samples))
                ranges.push_back({run_start, i});
            in_run = false;
        }
    }
    if (ranges.empty()) throw std::runtime_error("segment_on_states: no ON windows found");
    return ranges;
}

double compute_rdson(std::span<const RawRecord> window) {
    if (window.empty()) throw std::invalid_argument("compute_rdson: empty window");
    double sum = 0.0;
    for (const RawRecord& r : window) {
        if (r.i_d == 0.0) throw std::domain_error("compute_rdson: zero drain current sample");
        sum += r.v_ds / r.i_d;
    }
    return sum / static_cast<double>(window.size());
}

ts::DegradationTrace preprocess(std::span<const RawRecord> records,
                                const PreprocessConfig& config,
                                const std::string& id) {
    config.validate();
    const auto windows = segment_on_states(records, config);

    // One (time, R, T_f) triple per ON window; window time and temperature
    // are means over the window's samples.
    struct Point {
        double t_min;
        double r;
    };
    std::vector<Point> points;
    points.reserve(windows.size());
    double pristine = 0.0;
    bool have_pristine = false;
    for (const IndexRange& w : windows) {
        const auto slice = records.subspan(w.begin, w.end - w.begin);
        double t_sum = 0.0, temp_sum = 0.0;
        for (const RawRecord& r : slice) {
            t_sum += r.t;
            temp_sum += r.t_f;
        }
        const double n = static_cast<double>(slice.size());
        if (temp_sum / n < config.low_temp) continue;  // removed from the data
        const double r_on = compute_rdson(slice);
        if (!have_pristine) {
            pristine = r_on;
            have_pristine = true;
        }
        points.push_back({t_sum / n / 60.0, r_on - pristine});
    }
    if (points.empty())
        throw std::runtime_error("preprocess: no samples survive temperature filtering");

    // Aggregate to means per window of `aggregation_window` minutes,
    // timestamped at window centers. Empty windows are skipped.
    const double w = config.aggregation_window;
    std::map<long long, std::pair<double, std::size_t>> bins;
    for (const Point& p : points) {
        const long long k = static_cast<long long>(std::floor(p.t_min / w));
        auto& [sum, count] = bins[k];
        sum += p.r;
        ++count;
    }

    ts::DegradationTrace trace;
    trace.id = id;
    for (const auto& [k, agg] : bins) {
        trace.times.push_back((static_cast<double>(k) + 0.5) * w);
        trace.values.push_back(agg.first / static_cast<double>(agg.second));
    }
    // Anchor at exactly zero: the aggregated first window is the trace-level
    // pristine condition.
    const double anchor = trace.values.front();
    for (double& v : trace.values) v -= anchor;
    trace.validate();
    return trace;
}

ts::DegradationTrace synthesize_trace(const SynthConfig& config, const std::string& id) {
    config.validate();
    Rng rng(config.seed);
    ts::DegradationTrace trace;
    trace.id = id;
    const auto n = static_cast<std::size_t>(std::floor(config.duration)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        double v = config.alpha * (std::exp(config.beta * t) - 1.0);
        if (config.noise_sigma > 0.0) v += rng.normal(0.0, config.noise_sigma);
        trace.times.push_back(t);
        trace.values.push_back(v);
    }
    trace.validate();
    return trace;
}

std::vector<RawRecord> synthesize_raw(const SynthConfig& config, const DriveConfig& drive) {
    config.validate();
    drive.validate();
    Rng rng(config.seed);

    const double total_s = config.duration * 60.0;
    const double burst_len = static_cast<double>(drive.burst_cycles) / drive.pwm_frequency;
    const double dt = 1.0 / drive.sample_rate;

    std::vector<RawRecord> records;
    for (double t0 = 0.0; t0 < total_s; t0 += drive.burst_interval) {
        const double t_min = t0 / 60.0;
        double r_on = config.r_init + config.alpha * (std::exp(config.beta * t_min) - 1.0);
        if (config.noise_sigma > 0.0) r_on += rng.normal(0.0, config.noise_sigma);
        const double t_f = drive.temp_base + drive.temp_slope * t_min;
        for (double tau = 0.0; tau < burst_len; tau += dt) {
            const double t = t0 + tau;
            const double phase = tau * drive.pwm_frequency -
                                 std::floor(tau * drive.pwm_frequency);
            const bool on = phase < drive.duty_cycle;
            RawRecord rec;
            rec.t = t;
            rec.t_f = t_f;
            if (on) {
                rec.v_gs = drive.gate_voltage;
                rec.i_d = drive.drain_bias / (drive.load_ohms + r_on);
                rec.v_ds = rec.i_d * r_on;
            } else {
                rec.v_gs = 0.0;
                rec.i_d = 0.0;
                rec.v_ds = drive.drain_bias;
            }
            records.push_back(rec);
        }
    }
    return records;
}

std::vector<RawRecord> load_raw_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open raw file: " + path);
    std::vector<RawRecord> records;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("t_s", 0) == 0) continue;
        }
        RawRecord r;
        std::istringstream ss(line);
        char comma;
        if (!(ss >> r.t >> comma >> r.v_gs >> comma >> r.v_ds >> comma >> r.i_d >> comma >>
              r.t_f))
            throw std::runtime_error("raw csv: bad line: " + line);
        records.push_back(r);
    }
    if (records.empty()) throw std::runtime_error("raw csv: no records in " + path);
    return records;
}

void save_raw_csv(std::span<const RawRecord> records, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write raw file: " + path);
    f << "t_s,v_gs,v_ds,i_d,t_f\n";
    for (const RawRecord& r : records) {
        f << ts::format_double(r.t) << ',' << ts::format_double(r.v_gs) << ','
          << ts::format_double(r.v_ds) << ',' << ts::format_double(r.i_d) << ','
          << ts::format_double(r.t_f) << '\n';
    }
}

SynthConfig synth_config_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SynthConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.r_init = j.value("r_init", c.r_init);
    c.duration = j.value("duration", c.duration);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

PreprocessConfig preprocess_config_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PreprocessConfig c;
    c.gate_on_threshold = j.value("gate_on_threshold", c.gate_on_threshold);
    c.low_temp = j.value("low_temp", c.low_temp);
    c.aggregation_window = j.value("aggregation_window", c.aggregation_window);
    c.min_on_samples = j.value("min_on_samples", c.min_on_samples);
    c.validate();
    return c;
}

}  // namespace agebench::ingest
