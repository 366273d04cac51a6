#pragma once

#include <span>
#include <utility>
#include <vector>

#include "geocorrect/core.hpp"
#include "geocorrect/pointcloud.hpp"

namespace geocorrect {

struct SimParams {
    double footprint_sigma = 5.5;       // m, Gaussian beam radius parameter
    double footprint_truncation = 3.0;  // multiples of footprint_sigma
    double pulse_sigma_z = 1.0;         // m
    double bin_size = 0.15;             // m
    double noise_floor = 0.01;          // fraction of peak amplitude

    double footprint_radius() const { return footprint_sigma * footprint_truncation; }

    /// Throws Error(config) unless every field is positive and truncation >= 1.
    void validate() const;
};

/// Large-footprint waveform at (x, y): Gaussian horizontal weighting of the
/// in-radius points, binned on the global bin_size lattice and convolved
/// with a truncated, renormalised Gaussian pulse. Ground and RH profile are
/// filled by the two extraction functions below; offset is left at (0, 0).
/// Throws Error(empty_footprint) when no point lies within the radius.
SimulatedMetrics simulate_waveform(std::span<const PointRecord> points, double x, double y,
                                   const SimParams& params);
SimulatedMetrics simulate_waveform(const PointIndex& points, double x, double y,
                                   const SimParams& params);

/// Elevation of the lowest local maximum above noise_floor * peak.
/// Throws Error(no_detectable_mode).
double extract_ground_elevation(const Waveform& waveform, const SimParams& params);

/// Number of local maxima above noise_floor * peak.
int count_modes(const Waveform& waveform, double noise_floor);

/// Cumulative-energy relative heights for standard_percentiles(), measured
/// from the bottom bin upward and relative to `ground`.
/// Throws Error(empty_waveform) when the total energy is not positive.
RHProfile extract_rh_profile(const Waveform& waveform, double ground, double noise_floor = 0.01);

/// Simulated amplitudes linearly interpolated at the reported bin centres;
/// zero outside the simulated range. Throws Error(disjoint_waveforms) when
/// the elevation ranges do not overlap.
std::pair<std::vector<double>, std::vector<double>> resample_to_common_grid(const Waveform& reported,
                                                                            const Waveform& simulated);

}  // namespace geocorrect
