#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geocorrect {

/// Elevation-gridded return energy. Bin 0 is the top bin; bin i is centred
/// at top_elevation - i * bin_size.
struct Waveform {
    double top_elevation = 0.0;
    double bin_size = 0.15;
    std::vector<double> amplitudes;

    std::size_t size() const { return amplitudes.size(); }
    double elevation(std::size_t bin) const {
        return top_elevation - static_cast<double>(bin) * bin_size;
    }
    double bottom_elevation() const {
        return amplitudes.empty() ? top_elevation : elevation(amplitudes.size() - 1);
    }
    double total_energy() const;

    /// Throws Error(config) if bin_size <= 0, fewer than two bins, or a
    /// non-finite amplitude.
    void validate() const;

    bool operator==(const Waveform&) const = default;
};

/// Relative heights above the extracted ground, one per energy percentile.
struct RHProfile {
    std::vector<int> percentiles;
    std::vector<double> heights;

    std::optional<double> find(int percentile) const;
    /// Throws Error(config) when the percentile is absent.
    double at(int percentile) const;

    bool operator==(const RHProfile&) const = default;
};

/// 0, 25, 30, ..., 100.
const std::vector<int>& standard_percentiles();

struct Offset {
    double dx = 0.0;
    double dy = 0.0;

    double magnitude() const;
    bool operator==(const Offset&) const = default;
};

/// Square lattice of candidate horizontal displacements centred on (0, 0),
/// ordered row-major by dy then dx.
class OffsetGrid {
public:
    OffsetGrid() = default;
    /// Half-count is floor(span / (2 step)) so that every offset stays within
    /// +/- span/2 and (0, 0) is a member. Throws Error(config) on bad input.
    OffsetGrid(double span, double step);

    double span() const { return 2.0 * static_cast<double>(half_count_) * step_; }
    double requested_span() const { return requested_span_; }
    double step() const { return step_; }
    int half_count() const { return half_count_; }
    int side() const { return 2 * half_count_ + 1; }
    std::size_t size() const { return offsets_.size(); }
    std::size_t center_index() const { return size() / 2; }
    const std::vector<Offset>& offsets() const { return offsets_; }
    const Offset& operator[](std::size_t i) const { return offsets_[i]; }

private:
    double requested_span_ = 0.0;
    double step_ = 1.0;
    int half_count_ = 0;
    std::vector<Offset> offsets_;
};

/// Row-major index of (dx, dy). Throws Error(offset_not_on_grid) for
/// off-lattice input.
std::size_t canonical_offset_index(double dx, double dy, const OffsetGrid& grid);

/// One reported shot. Quality fields are optional so that a record missing
/// one can be rejected by the quality filter instead of failing to parse.
struct Footprint {
    std::int64_t shot_number = 0;
    int beam_id = 0;
    double delta_time = 0.0;
    double x = 0.0;
    double y = 0.0;
    double elev_lowestmode = 0.0;
    RHProfile rh;
    Waveform waveform;
    std::optional<double> sensitivity;
    std::optional<int> quality_flag;
    std::optional<int> degrade_flag;
    std::optional<double> solar_elevation;
    std::optional<int> num_detected_modes;
    std::optional<double> dem_elevation;

    bool operator==(const Footprint&) const = default;
};

struct SimulatedMetrics {
    Waveform waveform;
    double ground_elevation = 0.0;
    RHProfile rh;
    Offset offset;

    bool operator==(const SimulatedMetrics&) const = default;
};

/// Compact per-shot record passed from scoring to aggregation.
struct ScoredFootprint {
    std::int64_t shot_number = 0;
    int beam_id = 0;
    double delta_time = 0.0;
    std::vector<double> scores;
    bool valid = false;
    std::string reason;

    // Filled only when per-candidate dumps are requested.
    std::vector<double> candidate_ground;
    std::vector<double> candidate_rh95;

    bool operator==(const ScoredFootprint&) const = default;
};

enum class CorrectionMode { orbit, beam, footprint };

std::string_view to_string(CorrectionMode mode);
/// Throws Error(config) for an unknown name.
CorrectionMode parse_correction_mode(std::string_view name);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace geocorrect
