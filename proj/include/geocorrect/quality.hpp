#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geocorrect/core.hpp"

namespace geocorrect {

/// Footprint screening thresholds. Every check can be switched off.
struct QualityCriteria {
    bool require_degrade_zero = true;
    bool require_quality_one = true;
    bool require_night = true;
    bool check_sensitivity = true;
    double min_sensitivity = 0.9;
    bool forest_mode_check = true;  // reject RH95 >= 5 m with at most one mode
    bool check_max_rh95 = true;
    double max_rh95_m = 30.0;
    bool check_dem_diff = true;
    double max_dem_diff_m = 50.0;

    /// Throws Error(config) on non-finite or out-of-range thresholds.
    void validate() const;
};

/// First failing check in the order degrade_flag, quality_flag,
/// solar_elevation, sensitivity, mode count, rh95, dem difference; nullopt
/// when the footprint passes. A field needed by an enabled check but absent
/// gives "missing quality field".
std::optional<std::string> quality_rejection(const Footprint& fp, const QualityCriteria& criteria);

struct Rejection {
    Footprint footprint;
    std::string reason;
};

struct FilterOutcome {
    std::vector<Footprint> kept;
    std::vector<Rejection> rejected;
};

/// Input order is preserved in both outputs.
FilterOutcome apply_quality_filters(const std::vector<Footprint>& footprints, const QualityCriteria& criteria);

/// Vertical datum difference grid. Row 0 is the northern row; cell (r, c)
/// is centred at (origin_x + (c + 0.5) cell, origin_y + (nrows - r - 0.5) cell).
struct GeoidRaster {
    double origin_x = 0.0;  // lower-left corner
    double origin_y = 0.0;
    double cell_size = 1.0;
    int ncols = 0;
    int nrows = 0;
    std::vector<double> values;
    std::optional<double> nodata;

    void validate() const;
    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * ncols + col]; }
    bool is_nodata(double v) const { return nodata && v == *nodata; }

    /// Bilinear interpolation between cell centres, clamped to the outermost
    /// centres inside the extent. Nodata corners are dropped and the
    /// remaining weights renormalised. nullopt outside the extent or when all
    /// contributing corners are nodata.
    std::optional<double> sample(double x, double y) const;
};

/// ESRI ASCII grid. Header keys are case-insensitive; NODATA_value is
/// optional. Throws Error(parse) or Error(io).
GeoidRaster read_geoid_raster(const std::filesystem::path& path);
void write_geoid_raster(const std::filesystem::path& path, const GeoidRaster& raster);

struct DatumOutcome {
    std::vector<Footprint> kept;
    std::vector<double> shifts;  // parallel to kept
    std::vector<Rejection> rejected;
};

/// Subtracts the sampled difference from elev_lowestmode, the waveform
/// elevations and dem_elevation. RH values are untouched. Footprints
/// without a value are rejected with "no datum coverage".
DatumOutcome geoid_adjust(const std::vector<Footprint>& footprints, const GeoidRaster& raster);

}  // namespace geocorrect
