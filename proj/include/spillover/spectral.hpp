#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spillover/connectedness.hpp"
#include "spillover/varmodel.hpp"

namespace spillover {

// Discrete frequency response of the MA coefficients on the grid
// omega_m = 2 pi m / H_s, m = 0 .. H_s-1.
struct FrequencyGrid {
    std::size_t resolution = 0;
    std::vector<double> omegas;
    std::vector<Eigen::MatrixXcd> psi_hat;

    /// Psi_hat(omega_m) Sigma Psi_hat(omega_m)^*.
    Eigen::MatrixXcd power_spectrum(std::size_t m, const Eigen::MatrixXd& sigma) const;
};

/// Uses the first H_s coefficients, zero-padding when fewer are supplied.
FrequencyGrid frequency_response(const MaCoefficients& psi, std::size_t resolution);

// Horizon interval in days. The first range of a partition is closed at its
// lower end ([1,5]); the others are (lower, upper].
struct DayRange {
    double lower = 1.0;
    double upper = 1.0;
};

/// Parses "1-5,5-20,20-300".
std::vector<DayRange> parse_day_ranges(std::string_view text);
std::string format_day_ranges(std::span<const DayRange> ranges);

struct BandSpec {
    std::string name;
    DayRange days;
    double a = 0.0;  // frequency interval (a, b], radians
    double b = 0.0;
    std::vector<std::size_t> index_set;     // positive-frequency indices 1 .. H_s/2
    std::vector<std::size_t> grid_indices;  // index_set, their negative-frequency mirrors, and 0 for the lowest band
};

/// Days [l, u] map to frequencies (pi/u, pi/l], capped at pi. Grid points are
/// assigned by membership so bands never share an index; the band with the
/// longest horizon also takes every frequency below its lower edge, zero
/// included, so the partition covers the whole grid.
std::vector<BandSpec> make_bands(std::span<const DayRange> ranges, std::size_t resolution);

struct BandFevd {
    std::string name;
    Eigen::MatrixXd theta;       // band shares scaled by all-band row sums
    Eigen::MatrixXd raw;         // band shares before scaling
};

struct SpectralFevd {
    std::vector<BandFevd> bands;
    Eigen::MatrixXd weights;  // N x H_s, weighting function Gamma_j(omega_m)
    Eigen::MatrixXcd omega;   // aggregate spectral power over the grid
    Eigen::MatrixXd aggregate;  // sum of raw band shares
    double max_imaginary = 0.0;  // largest |Im| seen in a diagonal quadratic form
};

SpectralFevd band_fevd(const FrequencyGrid& grid, const Eigen::MatrixXd& sigma, std::span<const BandSpec> bands);

std::vector<ConnectednessTable> band_connectedness(const SpectralFevd& fevd, const std::vector<std::string>& labels = {});

}  // namespace spillover
