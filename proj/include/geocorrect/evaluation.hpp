#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geocorrect/core.hpp"
#include "geocorrect/correction.hpp"

namespace geocorrect {

/// 1 - SS_res / SS_tot. Throws Error(zero_variance) for constant y and
/// Error(config) for mismatched lengths or fewer than two samples.
double r_squared(std::span<const double> y, std::span<const double> yhat);

/// Root mean squared residual. Throws Error(empty_input).
double rmse(std::span<const double> y, std::span<const double> yhat);

/// rmse / mean(y) * 100. Throws Error(undefined_rrmse) when mean(y) == 0.
double rrmse(std::span<const double> y, std::span<const double> yhat);

/// RH95 - RH50.
double delta_rh(const RHProfile& rh);

struct Stats {
    std::size_t n = 0;
    std::optional<double> r_squared;
    std::optional<double> rmse_m;
    std::optional<double> rrmse_pct;
    std::vector<std::string> gaps;  // why a statistic is missing
};

Stats compute_stats(std::span<const double> y, std::span<const double> yhat);

struct ScatterRow {
    std::int64_t shot_number = 0;
    double reported = 0.0;
    double simulated = 0.0;
    CorrectionMode mode = CorrectionMode::orbit;
};

struct AccuracyReport {
    std::string variable;  // RH95, dRH95_50 or terrain
    Stats stats;
    double mean_offset_magnitude_m = 0.0;
    std::map<std::string, Stats> per_mode;
    std::vector<ScatterRow> scatter;  // sorted by shot number
};

struct ReportSet {
    std::size_t results = 0;
    std::size_t used = 0;
    std::size_t excluded = 0;  // anything without a simulation at the chosen offset
    double mean_offset_magnitude_m = 0.0;
    std::vector<AccuracyReport> reports;
};

/// Compares each corrected result with its reported footprint (matched by
/// shot number). Results without a simulation are counted but excluded.
ReportSet build_report(std::span<const CorrectionResult> results, std::span<const Footprint> originals);

/// accuracy_report.json plus scatter_<variable>.csv with columns
/// shot_number,reported,simulated,mode.
void write_report(const std::filesystem::path& dir, const ReportSet& report);

}  // namespace geocorrect
