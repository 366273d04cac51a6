#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geocorrect/core.hpp"
#include "geocorrect/pointcloud.hpp"
#include "geocorrect/scoring.hpp"
#include "geocorrect/simulator.hpp"

namespace geocorrect {

struct ClusterWindow {
    double time_window_s = 0.04;  // 0 gives singleton clusters
};

/// Per-shot outcome status as written to the correction output.
enum class ResultStatus {
    corrected,         // offset applied and resimulated
    filtered,          // rh95 change / empty footprint / unscorable
    uncorrected,       // no aggregate available (e.g. beam with no valid shots)
    discarded,         // resimulation at the chosen offset failed
    out_of_coverage,   // no tile meets the footprint buffer
    quality_rejected,  // failed a quality criterion or datum lookup
};

std::string_view to_string(ResultStatus status);
ResultStatus parse_result_status(std::string_view name);

struct CorrectionResult {
    std::int64_t shot_number = 0;
    int beam_id = 0;
    CorrectionMode mode = CorrectionMode::orbit;
    ResultStatus status = ResultStatus::corrected;
    std::string reason;
    Offset chosen_offset;
    double x = 0.0;  // reported
    double y = 0.0;
    double corrected_x = 0.0;
    double corrected_y = 0.0;
    double final_score = 0.0;
    int cluster_size = 1;
    std::optional<double> datum_shift;
    std::optional<SimulatedMetrics> simulated;
    std::optional<SimulatedMetrics> origin;  // simulation at the reported location

    bool operator==(const CorrectionResult&) const = default;
};

/// Square candidate lattice; see OffsetGrid for the rounding rule.
OffsetGrid generate_offset_grid(double span_g = 30.0, double step_s = 1.0);

/// Simulates at every (fp.x + dx, fp.y + dy); failed slots are nullopt.
CandidateSet simulate_candidates(const Footprint& fp, const PointIndex& points, const OffsetGrid& grid,
                                 const SimParams& params);

/// Simulate, apply the RH95 change filter, score. Failures are encoded in the
/// returned record, never thrown.
ScoredFootprint process_footprint(const Footprint& fp, const PointIndex& points, const OffsetGrid& grid,
                                  const SimParams& params, const MetricSet& metrics,
                                  double rh95_threshold_m = 10.0, bool keep_candidate_details = false);

struct Aggregate {
    Offset offset;
    std::size_t index = 0;
    double mean_score = 0.0;
};

/// Argmax of the per-offset mean score over valid records. Ties go to the
/// smaller displacement, then to the earlier (dy, dx).
/// Throws Error(nothing_to_correct) when no record is valid.
Aggregate aggregate_orbit(std::span<const ScoredFootprint> scored, const OffsetGrid& grid);

/// aggregate_orbit per beam; nullopt marks a beam with no valid record.
std::map<int, std::optional<Aggregate>> aggregate_beam(std::span<const ScoredFootprint> scored,
                                                       const OffsetGrid& grid);

/// For every valid target, indices (into `scored`) of valid records on the
/// same beam with |dt| <= window/2, target included. Invalid targets get an
/// empty set.
std::vector<std::vector<std::size_t>> cluster_footprints(std::span<const ScoredFootprint> scored,
                                                         ClusterWindow window);

struct FootprintAggregate {
    Aggregate aggregate;
    int cluster_size = 1;
};

/// Mean over each target's cluster; only valid targets get an entry.
std::map<std::int64_t, FootprintAggregate> aggregate_footprint(
    std::span<const ScoredFootprint> scored, const std::vector<std::vector<std::size_t>>& clusters,
    const OffsetGrid& grid);

/// Final simulation at reported + offset. A failure yields status
/// `discarded` with the failure message as reason.
CorrectionResult resimulate_and_emit(const Footprint& fp, const Offset& offset, const PointIndex& points,
                                     const SimParams& params, CorrectionMode mode = CorrectionMode::orbit);

}  // namespace geocorrect
