#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace agebench::ts {

/**
 * A delta-R_DS_ON ageing trace: timestamps in minutes, values in ohms.
 * Immutable value type; the common currency between all modules.
 */
struct DegradationTrace {
    std::string id;
    std::vector<double> times;   // strictly increasing, minutes
    std::vector<double> values;  // ohms, same length as times

    std::size_t size() const { return values.size(); }

    /// Throws std::invalid_argument if any invariant is violated.
    void validate() const;
};

/**
 * Point forecast with optional quantile bands.
 */
struct ForecastResult {
    std::size_t origin_index = 0;  // index of last observed point
    std::size_t horizon = 0;       // steps ahead
    std::vector<double> point;     // length == horizon
    std::map<double, std::vector<double>> quantiles;  // level -> length-horizon values

    void validate() const;
};

struct SplitSpec {
    double train_fraction = 0.33;  // in (0, 1)
};

/// Mean absolute percentage error, in percent. Throws on length mismatch,
/// zero actual values or non-finite inputs.
double mape(std::span<const double> actual, std::span<const double> predicted);

/// Split into (train, test) with floor(fraction * n) points in train,
/// at least one point on each side.
std::pair<DegradationTrace, DegradationTrace> split(const DegradationTrace& trace,
                                                    const SplitSpec& spec);

/// Append values to a trace, extending timestamps by the median sampling
/// interval. Appending nothing returns the trace unchanged.
DegradationTrace append_values(const DegradationTrace& trace,
                               std::span<const double> new_values);

double median_interval(const DegradationTrace& trace);

double median(std::vector<double> v);

/// Trace file format: CSV with header `time_min,delta_r_on`.
std::string trace_to_csv(const DegradationTrace& trace);
DegradationTrace trace_from_csv(const std::string& text, const std::string& id);
DegradationTrace load_trace(const std::string& path);
void save_trace(const DegradationTrace& trace, const std::string& path);

/// Shortest round-trip decimal form; locale-free and deterministic.
std::string format_double(double v);

}  // namespace agebench::ts
