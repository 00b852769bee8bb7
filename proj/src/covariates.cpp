#include "agebench/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "agebench/kernels.hpp"

namespace agebench::cov {

namespace {

constexpr std::size_t grid_size = 100;
constexpr std::size_t block = 20;

// Linear interpolation of the trace onto the normalized 0..99 axis.
std::vector<double> resample_to_grid(const ts::DegradationTrace& trace) {
    const double t0 = trace.times.front(), t1 = trace.times.back();
    std::vector<double> out(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double t = t0 + (t1 - t0) * double(i) / double(grid_size - 1);
        auto it = std::lower_bound(trace.times.begin(), trace.times.end(), t);
        if (it == trace.times.begin()) {
            out[i] = trace.values.front();
        } else if (it == trace.times.end()) {
            out[i] = trace.values.back();
        } else {
            const std::size_t hi = std::size_t(it - trace.times.begin());
            const std::size_t lo = hi - 1;
            const double f = (t - trace.times[lo]) / (trace.times[hi] - trace.times[lo]);
            out[i] = trace.values[lo] + f * (trace.values[hi] - trace.values[lo]);
        }
    }
    return out;
}

}  // namespace

double PiecewiseLinearCovariate::evaluate(double t) const {
    for (const Segment& s : segments)
        if (t >= double(s.start) && t <= double(s.end)) return s.m * t + s.b;
    // Outside 0..99: extend the nearest segment.
    const Segment& s = t < 0.0 ? segments.front() : segments.back();
    return s.m * t + s.b;
}

PiecewiseLinearCovariate piecewise_linearize(const ts::DegradationTrace& trace) {
    trace.validate();
    if (trace.size() < 10) throw std::invalid_argument("piecewise_linearize: trace too short");
    const std::vector<double> grid = resample_to_grid(trace);

    PiecewiseLinearCovariate out;
    out.source_id = trace.id;
    for (std::size_t k = 0; k < 5; ++k) {
        const std::size_t lo = k * block, hi = lo + block;  // [lo, hi)
        // Ordinary least squares on (index, value) pairs of the block.
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double x = double(i);
            sx += x;
            sy += grid[i];
            sxx += x * x;
            sxy += x * grid[i];
        }
        const double n = double(block);
        const double denom = n * sxx - sx * sx;
        PiecewiseLinearCovariate::Segment seg;
        seg.m = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
        seg.b = (sy - seg.m * sx) / n;
        seg.start = lo;
        seg.end = hi - 1;
        out.segments[k] = seg;
    }
    return out;
}

std::vector<std::vector<double>> covariate_channels(
    const std::vector<ts::DegradationTrace>& references) {
    if (references.empty()) throw std::invalid_argument("covariate_channels: no references");
    std::vector<std::vector<double>> per_channel;
    for (const auto& ref : references) {
        const auto pl = piecewise_linearize(ref);
        std::vector<double> ch(grid_size);
        for (std::size_t i = 0; i < grid_size; ++i) ch[i] = pl.evaluate(double(i));
        double lo = ch[0], hi = ch[0];
        for (double v : ch) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double range = hi - lo;
        for (double& v : ch) v = range > 1e-300 ? (v - lo) / range : 0.0;
        per_channel.push_back(std::move(ch));
    }
    // Grid-major layout: one row per grid point.
    std::vector<std::vector<double>> out(grid_size,
                                         std::vector<double>(references.size(), 0.0));
    for (std::size_t j = 0; j < per_channel.size(); ++j)
        for (std::size_t i = 0; i < grid_size; ++i) out[i][j] = per_channel[j][i];
    return out;
}

double frechet_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("frechet_distance: empty input");
    const std::size_t n = a.size(), m = b.size();
    std::vector<double> prev(m), cur(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double cost = std::abs(a[0] - b[j]);
        prev[j] = j == 0 ? cost : std::max(prev[j - 1], cost);
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double cost = std::abs(a[i] - b[j]);
            double reach;
            if (j == 0)
                reach = prev[0];
            else
                reach = std::min({prev[j], prev[j - 1], cur[j - 1]});
            cur[j] = std::max(reach, cost);
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

std::vector<std::vector<double>> distance_matrix(
    const std::vector<ts::DegradationTrace>& traces) {
    const std::size_t n = traces.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    kernels::parallel_for(pairs.size(), [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        d[i][j] = d[j][i] = frechet_distance(traces[i].values, traces[j].values);
    });
    return d;
}

std::vector<ts::DegradationTrace> select_family(const std::vector<ts::DegradationTrace>& traces,
                                                double cutoff_multiplier) {
    if (traces.size() < 3) throw std::invalid_argument("select_family: need >= 3 traces");
    const auto d = distance_matrix(traces);
    const std::size_t n = traces.size();

    std::vector<double> all;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) all.push_back(d[i][j]);
    const double overall = ts::median(all);

    std::vector<ts::DegradationTrace> kept;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row.push_back(d[i][j]);
        if (ts::median(row) <= cutoff_multiplier * overall) kept.push_back(traces[i]);
    }
    return kept;
}

std::string channels_to_csv(const std::vector<std::vector<double>>& channels,
                            const std::vector<std::string>& ids) {
    std::string out = "grid";
    for (const auto& id : ids) out += "," + id;
    out += '\n';
    for (std::size_t i = 0; i < channels.size(); ++i) {
        out += std::to_string(i);
        for (double v : channels[i]) out += ',' + ts::format_double(v);
        out += '\n';
    }
    return out;
}

std::string matrix_to_csv(const std::vector<std::vector<double>>& m,
                          const std::vector<std::string>& ids) {
    std::string out = "id";
    for (const auto& id : ids) out += "," + id;
    out += '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out += ids[i];
        for (double v : m[i]) out += ',' + ts::format_double(v);
        out += '\n';
    }
    return out;
}

}  // namespace agebench::cov
