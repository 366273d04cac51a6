#include "geocorrect/quality.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "geocorrect/error.hpp"

namespace geocorrect {

void QualityCriteria::validate() const {
    if (!std::isfinite(min_sensitivity) || min_sensitivity < 0.0 || min_sensitivity > 1.0) {
        throw Error(ErrorKind::config, "min_sensitivity must lie in [0, 1]");
    }
    if (!std::isfinite(max_rh95_m) || max_rh95_m <= 0.0) {
        throw Error(ErrorKind::config, "max_rh95_m must be positive");
    }
    if (!std::isfinite(max_dem_diff_m) || max_dem_diff_m <= 0.0) {
        throw Error(ErrorKind::config, "max_dem_diff_m must be positive");
    }
}

std::optional<std::string> quality_rejection(const Footprint& fp, const QualityCriteria& c) {
    const std::string missing = "missing quality field";
    if (c.require_degrade_zero) {
        if (!fp.degrade_flag) return missing;
        if (*fp.degrade_flag != 0) return "degrade_flag";
    }
    if (c.require_quality_one) {
        if (!fp.quality_flag) return missing;
        if (*fp.quality_flag != 1) return "quality_flag";
    }
    if (c.require_night) {
        if (!fp.solar_elevation) return missing;
        if (!(*fp.solar_elevation < 0.0)) return "solar_elevation";
    }
    if (c.check_sensitivity) {
        if (!fp.sensitivity) return missing;
        if (!(*fp.sensitivity >= c.min_sensitivity)) return "sensitivity";
    }
    const auto rh95 = fp.rh.find(95);
    if (c.forest_mode_check) {
        if (!rh95 || !fp.num_detected_modes) return missing;
        if (*rh95 >= 5.0 && *fp.num_detected_modes <= 1) return "mode count";
    }
    if (c.check_max_rh95) {
        if (!rh95) return missing;
        if (!(*rh95 <= c.max_rh95_m)) return "rh95";
    }
    if (c.check_dem_diff) {
        if (!fp.dem_elevation) return missing;
        if (!(std::abs(fp.elev_lowestmode - *fp.dem_elevation) <= c.max_dem_diff_m)) return "dem difference";
    }
    return std::nullopt;
}

FilterOutcome apply_quality_filters(const std::vector<Footprint>& footprints, const QualityCriteria& criteria) {
    FilterOutcome out;
    for (const auto& fp : footprints) {
        if (auto reason = quality_rejection(fp, criteria)) {
            out.rejected.push_back({fp, std::move(*reason)});
        } else {
            out.kept.push_back(fp);
        }
    }
    return out;
}

void GeoidRaster::validate() const {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw Error(ErrorKind::config, "cellsize must be positive");
    if (ncols <= 0 || nrows <= 0) throw Error(ErrorKind::config, "raster dimensions must be positive");
    if (values.size() != static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows)) {
        throw Error(ErrorKind::config, "raster value count does not match its dimensions");
    }
}

std::optional<double> GeoidRaster::sample(double x, double y) const {
    const double width = ncols * cell_size, height = nrows * cell_size;
    if (!(x >= origin_x && x <= origin_x + width && y >= origin_y && y <= origin_y + height)) return std::nullopt;

    // Continuous column / row-from-bottom coordinates where centres are integers.
    const double fc = std::clamp((x - origin_x) / cell_size - 0.5, 0.0, static_cast<double>(ncols - 1));
    const double fb = std::clamp((y - origin_y) / cell_size - 0.5, 0.0, static_cast<double>(nrows - 1));
    const int c0 = std::min(static_cast<int>(std::floor(fc)), std::max(ncols - 2, 0));
    const int b0 = std::min(static_cast<int>(std::floor(fb)), std::max(nrows - 2, 0));
    const int c1 = std::min(c0 + 1, ncols - 1);
    const int b1 = std::min(b0 + 1, nrows - 1);
    const double tx = fc - c0, ty = fb - b0;

    const int rows[2] = {nrows - 1 - b0, nrows - 1 - b1};
    const int cols[2] = {c0, c1};
    const double wy[2] = {1.0 - ty, ty};
    const double wx[2] = {1.0 - tx, tx};
    double sum = 0.0, wsum = 0.0;
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            const double w = wy[j] * wx[i];
            const double v = at(rows[j], cols[i]);
            if (is_nodata(v) || w == 0.0) continue;
            sum += w * v;
            wsum += w;
        }
    }
    if (wsum == 0.0) {
        // Exactly on a nodata-only corner set, or every weighted corner is nodata.
        return std::nullopt;
    }
    return sum / wsum;
}

GeoidRaster read_geoid_raster(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open raster " + path.string());
    GeoidRaster r;
    std::map<std::string, double> header;
    std::string line;
    std::streampos data_start = in.tellg();
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) {
            data_start = in.tellg();
            continue;
        }
        if (!std::isalpha(static_cast<unsigned char>(key[0]))) break;
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
        double value = 0.0;
        if (!(ls >> value)) throw Error(ErrorKind::parse, "raster header '" + key + "' has no value");
        header[key] = value;
        data_start = in.tellg();
    }
    for (const char* key : {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize"}) {
        if (!header.count(key)) throw Error(ErrorKind::parse, std::string("raster header lacks ") + key);
    }
    r.ncols = static_cast<int>(header["ncols"]);
    r.nrows = static_cast<int>(header["nrows"]);
    r.origin_x = header["xllcorner"];
    r.origin_y = header["yllcorner"];
    r.cell_size = header["cellsize"];
    if (header.count("nodata_value")) r.nodata = header["nodata_value"];
    if (r.ncols <= 0 || r.nrows <= 0) throw Error(ErrorKind::parse, "raster dimensions must be positive");

    in.clear();
    in.seekg(data_start);
    const std::size_t expected = static_cast<std::size_t>(r.ncols) * static_cast<std::size_t>(r.nrows);
    r.values.reserve(expected);
    double v = 0.0;
    while (r.values.size() < expected && in >> v) r.values.push_back(v);
    if (r.values.size() != expected) {
        throw Error(ErrorKind::parse, "raster has " + std::to_string(r.values.size()) + " values, expected " +
                                          std::to_string(expected));
    }
    std::string extra;
    if (in >> extra) throw Error(ErrorKind::parse, "raster has trailing data");
    r.validate();
    return r;
}

void write_geoid_raster(const std::filesystem::path& path, const GeoidRaster& raster) {
    raster.validate();
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write raster " + path.string());
    out << std::setprecision(17);
    out << "ncols " << raster.ncols << "\nnrows " << raster.nrows << "\nxllcorner " << raster.origin_x
        << "\nyllcorner " << raster.origin_y << "\ncellsize " << raster.cell_size << "\n";
    if (raster.nodata) out << "NODATA_value " << *raster.nodata << "\n";
    for (int row = 0; row < raster.nrows; ++row) {
        for (int col = 0; col < raster.ncols; ++col) out << (col ? " " : "") << raster.at(row, col);
        out << "\n";
    }
    if (!out) throw Error(ErrorKind::io, "failed writing raster " + path.string());
}

DatumOutcome geoid_adjust(const std::vector<Footprint>& footprints, const GeoidRaster& raster) {
    raster.validate();
    DatumOutcome out;
    for (const auto& fp : footprints) {
        const auto shift = raster.sample(fp.x, fp.y);
        if (!shift) {
            out.rejected.push_back({fp, "no datum coverage"});
            continue;
        }
        Footprint adjusted = fp;
        adjusted.elev_lowestmode -= *shift;
        adjusted.waveform.top_elevation -= *shift;
        if (adjusted.dem_elevation) *adjusted.dem_elevation -= *shift;
        out.kept.push_back(std::move(adjusted));
        out.shifts.push_back(*shift);
    }
    return out;
}

}  // namespace geocorrect
