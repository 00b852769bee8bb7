#include "agebench/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace agebench::ts {

void DegradationTrace::validate() const {
    if (values.empty()) throw std::invalid_argument("trace: length must be >= 1");
    if (times.size() != values.size())
        throw std::invalid_argument("trace: times and values length mismatch");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
            throw std::invalid_argument("trace: non-finite entry");
        if (i > 0 && times[i] <= times[i - 1])
            throw std::invalid_argument("trace: times must be strictly increasing");
    }
}

void ForecastResult::validate() const {
    if (point.size() != horizon)
        throw std::invalid_argument("forecast: point length != horizon");
    for (const auto& [q, vals] : quantiles) {
        if (vals.size() != horizon)
            throw std::invalid_argument("forecast: quantile length != horizon");
        (void)q;
    }
    // Quantile values must be non-decreasing in q at every step.
    const std::vector<double>* prev = nullptr;
    for (const auto& [q, vals] : quantiles) {
        (void)q;
        if (prev) {
            for (std::size_t i = 0; i < vals.size(); ++i)
                if (vals[i] < (*prev)[i])
                    throw std::invalid_argument("forecast: quantile crossing");
        }
        prev = &vals;
    }
}

double mape(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size())
        throw std::invalid_argument("mape: length mismatch");
    if (actual.empty()) throw std::invalid_argument("mape: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i]))
            throw std::invalid_argument("mape: non-finite input");
        if (actual[i] == 0.0)
            throw std::domain_error("mape: actual value is zero, metric undefined");
        sum += std::abs((actual[i] - predicted[i]) / actual[i]);
    }
    return 100.0 * sum / static_cast<double>(actual.size());
}

std::pair<DegradationTrace, DegradationTrace> split(const DegradationTrace& trace,
                                                    const SplitSpec& spec) {
    trace.validate();
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        throw std::invalid_argument("split: train_fraction must be in (0,1)");
    const std::size_t n = trace.size();
    if (n < 2) throw std::invalid_argument("split: trace must have >= 2 points");
    std::size_t k = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(n)));
    k = std::max<std::size_t>(k, 1);
    if (k >= n) throw std::invalid_argument("split: fraction leaves empty test side");

    DegradationTrace train{trace.id,
                           {trace.times.begin(), trace.times.begin() + k},
                           {trace.values.begin(), trace.values.begin() + k}};
    DegradationTrace test{trace.id,
                          {trace.times.begin() + k, trace.times.end()},
                          {trace.values.begin() + k, trace.values.end()}};
    return {std::move(train), std::move(test)};
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median_interval(const DegradationTrace& trace) {
    if (trace.size() < 2) return 1.0;
    std::vector<double> gaps;
    gaps.reserve(trace.size() - 1);
    for (std::size_t i = 1; i < trace.size(); ++i)
        gaps.push_back(trace.times[i] - trace.times[i - 1]);
    return median(std::move(gaps));
}

DegradationTrace append_values(const DegradationTrace& trace,
                               std::span<const double> new_values) {
    trace.validate();
    if (new_values.empty()) return trace;
    for (double v : new_values)
        if (!std::isfinite(v)) throw std::invalid_argument("append_values: non-finite value");

    DegradationTrace out = trace;
    const double dt = median_interval(trace);
    double t = trace.times.back();
    for (double v : new_values) {
        t += dt;
        out.times.push_back(t);
        out.values.push_back(v);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return {buf, p};
}

std::string trace_to_csv(const DegradationTrace& trace) {
    std::string out = "time_min,delta_r_on\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += format_double(trace.times[i]);
        out += ',';
        out += format_double(trace.values[i]);
        out += '\n';
    }
    return out;
}

namespace {

double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error(std::string("csv: bad ") + what + " field: " + std::string(s));
    return v;
}

}  // namespace

DegradationTrace trace_from_csv(const std::string& text, const std::string& id) {
    DegradationTrace trace;
    trace.id = id;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("time_min", 0) == 0) continue;  // header
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("csv: missing comma: " + line);
        trace.times.push_back(parse_double(std::string_view(line).substr(0, comma), "time"));
        trace.values.push_back(parse_double(std::string_view(line).substr(comma + 1), "value"));
    }
    trace.validate();
    return trace;
}

DegradationTrace load_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return trace_from_csv(ss.str(), std::filesystem::path(path).stem().string());
}

void save_trace(const DegradationTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write trace file: " + path);
    f << trace_to_csv(trace);
}

}  // namespace agebench::ts
