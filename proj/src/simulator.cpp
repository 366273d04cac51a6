#include "geocorrect/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geocorrect/error.hpp"

namespace geocorrect {

namespace {

struct Deposit {
    double z;
    double w;
};

// Reused per thread to avoid an allocation per candidate.
thread_local std::vector<Deposit> t_deposits;
thread_local std::vector<double> t_binned;

std::vector<double> pulse_kernel(const SimParams& params, long& half_width) {
    half_width = static_cast<long>(std::ceil(4.0 * params.pulse_sigma_z / params.bin_size - 1e-9));
    std::vector<double> k(static_cast<std::size_t>(2 * half_width + 1));
    double sum = 0.0;
    const double inv = 1.0 / (2.0 * params.pulse_sigma_z * params.pulse_sigma_z);
    for (long i = -half_width; i <= half_width; ++i) {
        const double dz = static_cast<double>(i) * params.bin_size;
        const double g = std::exp(-dz * dz * inv);
        k[static_cast<std::size_t>(i + half_width)] = g;
        sum += g;
    }
    for (double& g : k) g /= sum;
    return k;
}

SimulatedMetrics build_from_deposits(const std::vector<Deposit>& deposits, const SimParams& params) {
    if (deposits.empty()) throw Error(ErrorKind::empty_footprint, "empty footprint");

    double zmin = deposits.front().z, zmax = zmin;
    for (const auto& d : deposits) {
        zmin = std::min(zmin, d.z);
        zmax = std::max(zmax, d.z);
    }
    long half = 0;
    const std::vector<double> kernel = pulse_kernel(params, half);

    const double b = params.bin_size;
    const long top_index = std::lround(zmax / b) + half;
    const long bottom_index = std::lround(zmin / b) - half;
    const std::size_t n = static_cast<std::size_t>(top_index - bottom_index + 1);

    t_binned.assign(n, 0.0);
    for (const auto& d : deposits) {
        const long bin = top_index - std::lround(d.z / b);
        t_binned[static_cast<std::size_t>(bin)] += d.w;
    }

    SimulatedMetrics out;
    out.waveform.bin_size = b;
    out.waveform.top_elevation = static_cast<double>(top_index) * b;
    out.waveform.amplitudes.assign(n, 0.0);
    auto& amp = out.waveform.amplitudes;
    // Deposits sit at least `half` bins from either end, so the full kernel
    // always fits and no energy is lost at the edges.
    for (std::size_t src = 0; src < n; ++src) {
        const double w = t_binned[src];
        if (w == 0.0) continue;
        const std::size_t first = src - static_cast<std::size_t>(half);
        for (std::size_t k = 0; k < kernel.size(); ++k) amp[first + k] += w * kernel[k];
    }

    out.ground_elevation = extract_ground_elevation(out.waveform, params);
    out.rh = extract_rh_profile(out.waveform, out.ground_elevation, params.noise_floor);
    return out;
}

}  // namespace

void SimParams::validate() const {
    for (double v : {footprint_sigma, footprint_truncation, pulse_sigma_z, bin_size, noise_floor}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::config, "simulation parameters must be positive");
        }
    }
    if (footprint_truncation < 1.0) throw Error(ErrorKind::config, "footprint truncation must be >= 1");
}

SimulatedMetrics simulate_waveform(std::span<const PointRecord> points, double x, double y,
                                   const SimParams& params) {
    const double radius = params.footprint_radius();
    const double r2 = radius * radius;
    const double inv = 1.0 / (2.0 * params.footprint_sigma * params.footprint_sigma);
    auto& deposits = t_deposits;
    deposits.clear();
    for (const auto& p : points) {
        const double dx = p.x - x, dy = p.y - y;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= r2) deposits.push_back({p.z, std::exp(-d2 * inv)});
    }
    return build_from_deposits(deposits, params);
}

SimulatedMetrics simulate_waveform(const PointIndex& points, double x, double y, const SimParams& params) {
    const double inv = 1.0 / (2.0 * params.footprint_sigma * params.footprint_sigma);
    auto& deposits = t_deposits;
    deposits.clear();
    points.for_each_within(x, y, params.footprint_radius(), [&](const PointRecord& p) {
        const double dx = p.x - x, dy = p.y - y;
        deposits.push_back({p.z, std::exp(-(dx * dx + dy * dy) * inv)});
    });
    return build_from_deposits(deposits, params);
}

namespace {

bool is_mode(const std::vector<double>& a, std::size_t i, double floor) {
    if (!(a[i] > floor)) return false;
    const double above = i == 0 ? -std::numeric_limits<double>::infinity() : a[i - 1];
    const double below = i + 1 == a.size() ? -std::numeric_limits<double>::infinity() : a[i + 1];
    return a[i] >= above && a[i] > below;
}

double peak_of(const Waveform& w) {
    double peak = 0.0;
    for (double a : w.amplitudes) peak = std::max(peak, a);
    return peak;
}

}  // namespace

double extract_ground_elevation(const Waveform& waveform, const SimParams& params) {
    const double peak = peak_of(waveform);
    if (!(peak > 0.0)) throw Error(ErrorKind::no_detectable_mode, "no detectable mode");
    const double floor = params.noise_floor * peak;
    const auto& a = waveform.amplitudes;
    for (std::size_t i = a.size(); i-- > 0;) {
        if (is_mode(a, i, floor)) return waveform.elevation(i);
    }
    throw Error(ErrorKind::no_detectable_mode, "no detectable mode");
}

int count_modes(const Waveform& waveform, double noise_floor) {
    const double peak = peak_of(waveform);
    if (!(peak > 0.0)) return 0;
    int modes = 0;
    for (std::size_t i = 0; i < waveform.amplitudes.size(); ++i) {
        if (is_mode(waveform.amplitudes, i, noise_floor * peak)) ++modes;
    }
    return modes;
}

RHProfile extract_rh_profile(const Waveform& waveform, double ground, double noise_floor) {
    const auto& a = waveform.amplitudes;
    const std::size_t n = a.size();
    double total = 0.0;
    for (double v : a) total += std::max(v, 0.0);
    if (!(total > 0.0)) throw Error(ErrorKind::empty_waveform, "empty waveform");

    // Cumulative energy from the bottom bin (index n-1) upward.
    std::vector<double> cum(n);
    double run = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        run += std::max(a[n - 1 - k], 0.0);
        cum[k] = run;
    }
    auto elevation_at_fraction = [&](double q) {
        const double target = q * total;
        for (std::size_t k = 0; k < n; ++k) {
            if (cum[k] <= 0.0 || cum[k] < target) continue;
            const double z = waveform.elevation(n - 1 - k);
            const double prev = k == 0 ? 0.0 : cum[k - 1];
            if (prev <= 0.0) return z;  // lowest energetic bin: nothing to interpolate from
            const double frac = (target - prev) / (cum[k] - prev);
            return z - waveform.bin_size + frac * waveform.bin_size;
        }
        return waveform.elevation(0);
    };

    const double peak = peak_of(waveform);
    double top = waveform.bottom_elevation();
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] > noise_floor * peak) {
            top = waveform.elevation(i);
            break;
        }
    }

    RHProfile rh;
    rh.percentiles = standard_percentiles();
    rh.heights.reserve(rh.percentiles.size());
    for (int p : rh.percentiles) {
        double h = p == 100 ? top - ground : elevation_at_fraction(p / 100.0) - ground;
        if (!rh.heights.empty()) h = std::max(h, rh.heights.back());
        rh.heights.push_back(h);
    }
    return rh;
}

std::pair<std::vector<double>, std::vector<double>> resample_to_common_grid(const Waveform& reported,
                                                                            const Waveform& simulated) {
    if (reported.amplitudes.empty() || simulated.amplitudes.empty()) {
        throw Error(ErrorKind::empty_waveform, "empty waveform");
    }
    const double r_top = reported.top_elevation, r_bot = reported.bottom_elevation();
    const double s_top = simulated.top_elevation, s_bot = simulated.bottom_elevation();
    if (r_bot > s_top || s_bot > r_top) {
        throw Error(ErrorKind::disjoint_waveforms, "disjoint waveforms");
    }
    const auto& s = simulated.amplitudes;
    const double last = static_cast<double>(s.size() - 1);
    std::vector<double> out(reported.amplitudes.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = (s_top - reported.elevation(i)) / simulated.bin_size;
        const double knot = std::round(t);
        if (std::abs(t - knot) < 1e-9 && knot >= 0.0 && knot <= last) {
            out[i] = s[static_cast<std::size_t>(knot)];
            continue;
        }
        if (t < 0.0 || t > last) continue;
        const auto i0 = static_cast<std::size_t>(std::floor(t));
        const double f = t - static_cast<double>(i0);
        out[i] = i0 + 1 < s.size() ? s[i0] * (1.0 - f) + s[i0 + 1] * f : s[i0];
    }
    return {reported.amplitudes, std::move(out)};
}

}  // namespace geocorrect
