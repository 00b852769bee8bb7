#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "agebench/timeseries.hpp"

namespace agebench::cov {

/**
 * Piecewise-linear abstraction of a reference ageing curve: the trace is
 * resampled to 100 points on a normalized 0..99 axis and least-squares lines
 * are fitted per 20%-block.
 */
struct PiecewiseLinearCovariate {
    struct Segment {
        double m = 0.0;  // slope per normalized-time unit
        double b = 0.0;  // intercept
        std::size_t start = 0, end = 0;  // inclusive grid indices
    };
    std::string source_id;
    std::array<Segment, 5> segments;

    double evaluate(double t) const;  // t on the 0..99 grid
};

PiecewiseLinearCovariate piecewise_linearize(const ts::DegradationTrace& trace);

/// One min-max normalized channel per reference trace, evaluated on the
/// 100-point grid. Result is grid-major: channels[i][j] = channel j at i.
std::vector<std::vector<double>> covariate_channels(
    const std::vector<ts::DegradationTrace>& references);

/// Discrete Fréchet distance with |value - value| ground metric, computed by
/// dynamic programming over monotone couplings.
double frechet_distance(std::span<const double> a, std::span<const double> b);

/// Drop traces whose median distance to the others exceeds
/// cutoff_multiplier x the overall median pairwise distance.
std::vector<ts::DegradationTrace> select_family(const std::vector<ts::DegradationTrace>& traces,
                                                double cutoff_multiplier = 3.0);

/// Pairwise distance matrix on the traces' value sequences.
std::vector<std::vector<double>> distance_matrix(
    const std::vector<ts::DegradationTrace>& traces);

std::string channels_to_csv(const std::vector<std::vector<double>>& channels,
                            const std::vector<std::string>& ids);
std::string matrix_to_csv(const std::vector<std::vector<double>>& m,
                          const std::vector<std::string>& ids);

}  // namespace agebench::cov
