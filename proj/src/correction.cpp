#include "geocorrect/correction.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "geocorrect/error.hpp"

namespace geocorrect {

namespace {

constexpr std::pair<ResultStatus, std::string_view> kStatusNames[] = {
    {ResultStatus::corrected, "corrected"},
    {ResultStatus::filtered, "filtered"},
    {ResultStatus::uncorrected, "uncorrected"},
    {ResultStatus::discarded, "discarded"},
    {ResultStatus::out_of_coverage, "out_of_coverage"},
    {ResultStatus::quality_rejected, "quality_rejected"},
};

// Valid indices sorted by shot number, so sums do not depend on input order.
std::vector<std::size_t> valid_in_shot_order(std::span<const ScoredFootprint> scored,
                                             std::span<const std::size_t> subset) {
    std::vector<std::size_t> out;
    for (std::size_t i : subset) {
        if (scored[i].valid) out.push_back(i);
    }
    std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
        if (scored[a].shot_number != scored[b].shot_number) return scored[a].shot_number < scored[b].shot_number;
        return a < b;
    });
    return out;
}

Aggregate argmax_of_means(std::span<const ScoredFootprint> scored, std::span<const std::size_t> members,
                          const OffsetGrid& grid) {
    const auto order = valid_in_shot_order(scored, members);
    if (order.empty()) throw Error(ErrorKind::nothing_to_correct, "nothing to correct");
    std::vector<double> sum(grid.size(), 0.0);
    for (std::size_t i : order) {
        const auto& s = scored[i].scores;
        if (s.size() != grid.size()) throw Error(ErrorKind::config, "score vector does not match the grid");
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += s[k];
    }
    const double n = static_cast<double>(order.size());
    // Offsets are enumerated row-major by (dy, dx), so keeping the first of
    // equal (score, magnitude) pairs realises the lexicographic tie-break.
    // Squared magnitudes are compared in lattice units to stay exact.
    auto mag2 = [&](std::size_t k) {
        const long side = grid.side();
        const long ix = static_cast<long>(k) % side - grid.half_count();
        const long iy = static_cast<long>(k) / side - grid.half_count();
        return ix * ix + iy * iy;
    };
    Aggregate best;
    best.index = 0;
    best.mean_score = sum[0] / n;
    for (std::size_t k = 1; k < sum.size(); ++k) {
        const double m = sum[k] / n;
        if (m > best.mean_score || (m == best.mean_score && mag2(k) < mag2(best.index))) {
            best.index = k;
            best.mean_score = m;
        }
    }
    best.offset = grid[best.index];
    return best;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

std::string_view to_string(ResultStatus status) {
    for (const auto& [s, name] : kStatusNames) {
        if (s == status) return name;
    }
    return "";
}

ResultStatus parse_result_status(std::string_view name) {
    for (const auto& [s, n] : kStatusNames) {
        if (n == name) return s;
    }
    throw Error(ErrorKind::parse, "unknown status '" + std::string(name) + "'");
}

OffsetGrid generate_offset_grid(double span_g, double step_s) { return OffsetGrid(span_g, step_s); }

CandidateSet simulate_candidates(const Footprint& fp, const PointIndex& points, const OffsetGrid& grid,
                                 const SimParams& params) {
    CandidateSet out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Offset& o = grid[i];
        try {
            SimulatedMetrics m = simulate_waveform(points, fp.x + o.dx, fp.y + o.dy, params);
            m.offset = o;
            out[i] = std::move(m);
        } catch (const Error&) {
            // empty footprint or no detectable mode at this candidate
        }
    }
    return out;
}

ScoredFootprint process_footprint(const Footprint& fp, const PointIndex& points, const OffsetGrid& grid,
                                  const SimParams& params, const MetricSet& metrics, double rh95_threshold_m,
                                  bool keep_candidate_details) {
    ScoredFootprint out;
    out.shot_number = fp.shot_number;
    out.beam_id = fp.beam_id;
    out.delta_time = fp.delta_time;
    try {
        const CandidateSet candidates = simulate_candidates(fp, points, grid, params);
        if (keep_candidate_details) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            out.candidate_ground.assign(grid.size(), nan);
            out.candidate_rh95.assign(grid.size(), nan);
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (!candidates[i]) continue;
                out.candidate_ground[i] = candidates[i]->ground_elevation;
                out.candidate_rh95[i] = candidates[i]->rh.find(95).value_or(nan);
            }
        }
        const bool any = std::any_of(candidates.begin(), candidates.end(), [](const auto& c) { return c.has_value(); });
        if (!any) {
            out.reason = "empty footprint";
            return out;
        }
        if (!fp.rh.find(95)) {
            out.reason = "missing rh95";
            return out;
        }
        if (rh95_change_filter(fp, candidates, rh95_threshold_m) == ChangeDecision::discard) {
            out.reason = "rh95 change";
            return out;
        }
        ScoredFootprint s = score_candidates(fp, candidates, metrics);
        out.scores = std::move(s.scores);
        out.valid = s.valid;
        out.reason = std::move(s.reason);
    } catch (const std::exception& e) {
        out.scores.clear();
        out.valid = false;
        out.reason = e.what();
    }
    return out;
}

Aggregate aggregate_orbit(std::span<const ScoredFootprint> scored, const OffsetGrid& grid) {
    const auto all = all_indices(scored.size());
    return argmax_of_means(scored, all, grid);
}

std::map<int, std::optional<Aggregate>> aggregate_beam(std::span<const ScoredFootprint> scored,
                                                       const OffsetGrid& grid) {
    std::map<int, std::vector<std::size_t>> by_beam;
    for (std::size_t i = 0; i < scored.size(); ++i) by_beam[scored[i].beam_id].push_back(i);
    std::map<int, std::optional<Aggregate>> out;
    for (const auto& [beam, members] : by_beam) {
        const bool any_valid =
            std::any_of(members.begin(), members.end(), [&](std::size_t i) { return scored[i].valid; });
        out[beam] = any_valid ? std::optional<Aggregate>(argmax_of_means(scored, members, grid)) : std::nullopt;
    }
    return out;
}

std::vector<std::vector<std::size_t>> cluster_footprints(std::span<const ScoredFootprint> scored,
                                                         ClusterWindow window) {
    if (!(window.time_window_s >= 0.0)) throw Error(ErrorKind::config, "time window must be >= 0");
    // Slack absorbs the rounding in k/242-style timestamps so that a window
    // that is an exact multiple of the shot interval includes its edge shots.
    const double half = window.time_window_s / 2.0 + 1e-9;
    std::map<int, std::vector<std::size_t>> by_beam;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (scored[i].valid) by_beam[scored[i].beam_id].push_back(i);
    }
    std::vector<std::vector<std::size_t>> clusters(scored.size());
    for (auto& [beam, idx] : by_beam) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (scored[a].delta_time != scored[b].delta_time) return scored[a].delta_time < scored[b].delta_time;
            return scored[a].shot_number < scored[b].shot_number;
        });
        std::size_t lo = 0, hi = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double t = scored[idx[k]].delta_time;
            while (t - scored[idx[lo]].delta_time > half) ++lo;
            if (hi < k) hi = k;
            while (hi + 1 < idx.size() && scored[idx[hi + 1]].delta_time - t <= half) ++hi;
            auto& c = clusters[idx[k]];
            c.assign(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
            std::sort(c.begin(), c.end());
        }
    }
    return clusters;
}

std::map<std::int64_t, FootprintAggregate> aggregate_footprint(
    std::span<const ScoredFootprint> scored, const std::vector<std::vector<std::size_t>>& clusters,
    const OffsetGrid& grid) {
    if (clusters.size() != scored.size()) throw Error(ErrorKind::config, "cluster list does not match input");
    std::map<std::int64_t, FootprintAggregate> out;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (!scored[i].valid || clusters[i].empty()) continue;
        FootprintAggregate fa;
        fa.aggregate = argmax_of_means(scored, clusters[i], grid);
        fa.cluster_size = static_cast<int>(clusters[i].size());
        out[scored[i].shot_number] = fa;
    }
    return out;
}

CorrectionResult resimulate_and_emit(const Footprint& fp, const Offset& offset, const PointIndex& points,
                                     const SimParams& params, CorrectionMode mode) {
    CorrectionResult r;
    r.shot_number = fp.shot_number;
    r.beam_id = fp.beam_id;
    r.mode = mode;
    r.chosen_offset = offset;
    r.x = fp.x;
    r.y = fp.y;
    r.corrected_x = fp.x + offset.dx;
    r.corrected_y = fp.y + offset.dy;
    try {
        SimulatedMetrics m = simulate_waveform(points, r.corrected_x, r.corrected_y, params);
        m.offset = offset;
        r.simulated = std::move(m);
        r.status = ResultStatus::corrected;
    } catch (const Error& e) {
        r.status = ResultStatus::discarded;
        r.reason = e.what();
    }
    return r;
}

}  // namespace geocorrect
