#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agebench/timeseries.hpp"

namespace agebench::ingest {

/**
 * One raw telemetry sample from a switching-cycle capture.
 */
struct RawRecord {
    double t;     // seconds
    double v_gs;  // gate-source voltage, V
    double v_ds;  // drain-source voltage, V
    double i_d;   // drain current, A
    double t_f;   // flange (case) temperature, degC
};

struct PreprocessConfig {
    double gate_on_threshold = 7.5;  // V; half the 15 V gate drive
    double low_temp = 0.0;           // degC cutoff; samples below are removed
    double aggregation_window = 1.0; // minutes
    int min_on_samples = 1;

    void validate() const;
};

/**
 * Synthetic ageing scenario: delta_R(t) = alpha * (exp(beta * t) - 1),
 * t in minutes, with optional additive Gaussian noise.
 */
struct SynthConfig {
    double alpha = 0.01;       // ohms
    double beta = 0.05;        // per minute
    double r_init = 0.1;       // ohms, pristine on-resistance
    double duration = 60.0;    // minutes
    double noise_sigma = 0.0;  // ohms
    std::uint64_t seed = 1;

    void validate() const;
};

/**
 * Electrical drive used to generate raw waveforms. Defaults follow the
 * accelerated-ageing rig: 15 V gate PWM at 1 kHz with 40% duty cycle,
 * 4 V drain bias and a 0.2 ohm load. Waveforms are captured as short
 * bursts so long experiments stay small on disk.
 */
struct DriveConfig {
    double gate_voltage = 15.0;      // V
    double pwm_frequency = 1000.0;   // Hz
    double duty_cycle = 0.4;
    double drain_bias = 4.0;         // V
    double load_ohms = 0.2;
    double sample_rate = 50000.0;    // Hz
    double burst_interval = 10.0;    // s between capture bursts
    int burst_cycles = 2;            // PWM cycles per burst
    double temp_base = 40.0;         // degC flange temperature
    double temp_slope = 0.0;         // degC per minute

    void validate() const;
};

struct IndexRange {
    std::size_t begin;  // inclusive
    std::size_t end;    // exclusive
};

/// Maximal contiguous runs with v_gs >= gate_on_threshold and at least
/// min_on_samples samples. Throws if no ON window exists.
std::vector<IndexRange> segment_on_states(std::span<const RawRecord> records,
                                          const PreprocessConfig& config);

/// Mean of per-sample v_ds / i_d over one ON window.
double compute_rdson(std::span<const RawRecord> window);

/// Full pipeline: ON-state segmentation, per-window R_DS_ON, temperature
/// filtering, pristine normalization and per-window mean aggregation.
/// The output trace starts at exactly 0 ohms.
ts::DegradationTrace preprocess(std::span<const RawRecord> records,
                                const PreprocessConfig& config,
                                const std::string& id = "trace");

/// Minute-sampled clean trace from the exponential growth law.
ts::DegradationTrace synthesize_trace(const SynthConfig& config,
                                      const std::string& id = "synthetic");

/// Raw switching waveforms for an ageing run under the given drive.
std::vector<RawRecord> synthesize_raw(const SynthConfig& config,
                                      const DriveConfig& drive);

/// Raw capture CSV: `t_s,v_gs,v_ds,i_d,t_f`.
std::vector<RawRecord> load_raw_csv(const std::string& path);
void save_raw_csv(std::span<const RawRecord> records, const std::string& path);

SynthConfig synth_config_from_json(const std::string& text);
PreprocessConfig preprocess_config_from_json(const std::string& text);

}  // namespace agebench::ingest
