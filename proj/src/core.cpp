#include "geocorrect/core.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "geocorrect/error.hpp"

namespace geocorrect {

double Waveform::total_energy() const {
    return std::accumulate(amplitudes.begin(), amplitudes.end(), 0.0);
}

void Waveform::validate() const {
    if (!(bin_size > 0.0) || !std::isfinite(bin_size)) {
        throw Error(ErrorKind::config, "waveform bin_size must be positive");
    }
    if (amplitudes.size() < 2) {
        throw Error(ErrorKind::config, "waveform needs at least two bins");
    }
    if (!std::isfinite(top_elevation)) {
        throw Error(ErrorKind::config, "waveform top_elevation is not finite");
    }
    for (double a : amplitudes) {
        if (!std::isfinite(a)) {
            throw Error(ErrorKind::config, "waveform amplitude is not finite");
        }
    }
}

std::optional<double> RHProfile::find(int percentile) const {
    for (std::size_t i = 0; i < percentiles.size() && i < heights.size(); ++i) {
        if (percentiles[i] == percentile) return heights[i];
    }
    return std::nullopt;
}

double RHProfile::at(int percentile) const {
    auto h = find(percentile);
    if (!h) {
        throw Error(ErrorKind::config,
                    "RH profile lacks percentile " + std::to_string(percentile));
    }
    return *h;
}

const std::vector<int>& standard_percentiles() {
    static const std::vector<int> p = [] {
        std::vector<int> v{0};
        for (int q = 25; q <= 100; q += 5) v.push_back(q);
        return v;
    }();
    return p;
}

double Offset::magnitude() const { return std::hypot(dx, dy); }

OffsetGrid::OffsetGrid(double span, double step) : requested_span_(span), step_(step) {
    if (!(span > 0.0) || !(step > 0.0) || !std::isfinite(span) || !std::isfinite(step)) {
        throw Error(ErrorKind::config, "grid span and step must be positive");
    }
    if (span < step) {
        throw Error(ErrorKind::config, "grid span must be at least one step");
    }
    half_count_ = static_cast<int>(std::floor(span / (2.0 * step) + 1e-9));
    const int n = side();
    offsets_.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            offsets_.push_back({static_cast<double>(col - half_count_) * step_,
                                static_cast<double>(row - half_count_) * step_});
        }
    }
}

std::size_t canonical_offset_index(double dx, double dy, const OffsetGrid& grid) {
    auto lattice = [&](double v) -> long {
        const double u = v / grid.step();
        const double r = std::round(u);
        if (!std::isfinite(u) || std::abs(u - r) > 1e-6 || std::abs(r) > grid.half_count()) {
            throw Error(ErrorKind::offset_not_on_grid, "offset not on grid");
        }
        return static_cast<long>(r) + grid.half_count();
    };
    const long col = lattice(dx);
    const long row = lattice(dy);
    return static_cast<std::size_t>(row * grid.side() + col);
}

std::string_view to_string(CorrectionMode mode) {
    switch (mode) {
        case CorrectionMode::orbit: return "orbit";
        case CorrectionMode::beam: return "beam";
        case CorrectionMode::footprint: return "footprint";
    }
    return "orbit";
}

CorrectionMode parse_correction_mode(std::string_view name) {
    if (name == "orbit") return CorrectionMode::orbit;
    if (name == "beam") return CorrectionMode::beam;
    if (name == "footprint") return CorrectionMode::footprint;
    throw Error(ErrorKind::config, "unknown correction mode '" + std::string(name) + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace geocorrect
