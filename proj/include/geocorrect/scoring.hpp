#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geocorrect/core.hpp"

namespace geocorrect {

enum class Metric { wave_pearson, wave_spearman, kl, wave_distance, terrain, rh_distance };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

/// Non-empty, duplicate-free ordered subset of the six metrics.
class MetricSet {
public:
    MetricSet() = default;
    /// Throws Error(config) when empty or duplicated.
    explicit MetricSet(std::vector<Metric> metrics);

    /// Space-separated metric names, e.g. "wave_spearman wave_distance kl".
    static MetricSet parse(std::string_view names);

    const std::vector<Metric>& metrics() const { return metrics_; }
    bool contains(Metric m) const;
    std::string to_string() const;

private:
    std::vector<Metric> metrics_;
};

inline constexpr double kDistributionEpsilon = 1e-12;

/// Clamp negatives to zero, add kDistributionEpsilon to every bin, divide by
/// the sum. Throws Error(degenerate_waveform) if no amplitude is positive.
std::vector<double> normalize_to_distribution(std::span<const double> amplitudes);
std::vector<double> normalize_to_distribution(const Waveform& w);

/// Product-moment correlation. Throws Error(constant_input) when either
/// input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
/// Pearson correlation of fractional (tie-averaged) ranks.
double spearman(std::span<const double> a, std::span<const double> b);
std::vector<double> fractional_ranks(std::span<const double> v);

/// sqrt(sum (r_i - s_i)^2).
double crssda(std::span<const double> r, std::span<const double> s);

/// sum r_i ln(r_i / s_i). Throws Error(not_a_distribution) when either input
/// does not sum to 1 within 1e-6 or has a non-positive entry.
double kl_divergence(std::span<const double> r, std::span<const double> s);

double aged(double zg_reported, double zg_simulated);

/// Euclidean distance over RH25, RH30, ..., RH100.
double rh_distance(const RHProfile& reported, const RHProfile& simulated);

/// One slot per grid offset; nullopt marks a failed simulation.
using CandidateSet = std::vector<std::optional<SimulatedMetrics>>;

/// Raw metric value per candidate (nullopt where it cannot be computed).
std::vector<std::optional<double>> raw_metric_values(const Footprint& fp, const CandidateSet& candidates,
                                                     Metric metric);

/// Per-footprint min-max mapping of raw values onto [0, 1], oriented so that
/// 1 is best. Missing values score 0.
std::vector<double> map_to_scores(std::span<const std::optional<double>> raw, Metric metric);

/// Mean of the per-metric scores for every candidate. valid is false (reason
/// "empty footprint") when every candidate failed.
ScoredFootprint score_candidates(const Footprint& fp, const CandidateSet& candidates,
                                 const MetricSet& metrics);

enum class ChangeDecision { keep, discard };

/// Discards when |RH95_reported - mean RH95 over valid candidates| exceeds
/// threshold_m (strict).
ChangeDecision rh95_change_filter(const Footprint& fp, const CandidateSet& candidates,
                                  double threshold_m = 10.0);

}  // namespace geocorrect
