#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "geocorrect/core.hpp"
#include "geocorrect/correction.hpp"
#include "geocorrect/pointcloud.hpp"
#include "geocorrect/quality.hpp"
#include "geocorrect/scoring.hpp"
#include "geocorrect/simulator.hpp"

namespace geocorrect {

struct RunConfig {
    std::optional<std::filesystem::path> input_file;
    std::optional<std::filesystem::path> granules_dir;
    std::filesystem::path tile_dir;
    std::filesystem::path out_dir;
    CorrectionMode mode = CorrectionMode::orbit;
    MetricSet criteria = MetricSet({Metric::wave_pearson});
    double grid_span = 30.0;
    double grid_step = 1.0;
    bool parallel = false;
    int n_workers = 8;
    double time_window_s = 0.04;
    BoundaryMode boundary_mode = BoundaryMode::convex;
    double rh95_threshold_m = 10.0;
    bool quality_filter = true;
    QualityCriteria quality;
    std::optional<std::filesystem::path> geoid_raster;
    bool save_sim_points = false;
    bool save_origin_location = false;
    std::optional<std::string> als_crs;  // recorded only; no reprojection
    SimParams sim;
    double tile_buffer_m = 50.0;
    std::optional<std::filesystem::path> scratch_root;  // default: system temp dir

    /// Throws Error(config).
    void validate() const;
    int worker_count() const { return parallel ? n_workers : 1; }
};

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

struct PoolReport {
    std::size_t retried = 0;  // items that failed on a worker
    std::size_t failed = 0;   // items that also failed on the coordinator retry
};

/// Applies fn(item, worker_id) to every item on `workers` threads and
/// returns results in input order. An item whose call throws is retried once
/// on the calling thread (worker id -1); if that throws too, on_failure(item)
/// supplies its result.
template <typename In, typename Out, typename Fn, typename Fallback>
std::vector<Out> worker_pool_map(std::span<const In> items, int workers, Fn&& fn, Fallback&& on_failure,
                                 PoolReport* report = nullptr) {
    if (workers < 1) workers = 1;
    std::vector<std::optional<Out>> slots(items.size());
    std::vector<char> failed(items.size(), 0);
    std::atomic<std::size_t> next{0};
    auto run = [&](int worker_id) {
        for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
            try {
                slots[i] = fn(items[i], worker_id);
            } catch (...) {
                failed[i] = 1;
            }
        }
    };
    const int spawn = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), items.size()));
    if (spawn <= 1) {
        run(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(spawn));
        for (int w = 0; w < spawn; ++w) threads.emplace_back(run, w);
        for (auto& t : threads) t.join();
    }
    PoolReport local;
    std::vector<Out> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (failed[i]) {
            ++local.retried;
            try {
                slots[i] = fn(items[i], -1);
            } catch (...) {
                ++local.failed;
                slots[i] = on_failure(items[i]);
            }
        }
        out.push_back(std::move(*slots[i]));
    }
    if (report) {
        report->retried += local.retried;
        report->failed += local.failed;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scratch directories
// ---------------------------------------------------------------------------

/// "<pid>-<sequence>", unique per run within a process and across live processes.
std::string make_run_id();

/// Creates <root>/geocorrect-<run_id>-w<NN> (NN = worker id, -1 -> "co").
/// Throws Error(io) when root is not writable.
std::filesystem::path allocate_scratch(const std::filesystem::path& root, const std::string& run_id,
                                       int worker_id);

/// File-name prefix for intermediate files of a worker, e.g. "w03_".
std::string scratch_prefix(int worker_id);

/// Removes geocorrect-* scratch directories whose owning process is gone.
std::vector<std::filesystem::path> purge_stale_scratch(const std::filesystem::path& root);

/// One directory per worker plus one for the coordinator, removed on
/// destruction.
class ScratchArea {
public:
    ScratchArea(const std::filesystem::path& root, int workers);
    ~ScratchArea();
    ScratchArea(const ScratchArea&) = delete;
    ScratchArea& operator=(const ScratchArea&) = delete;

    const std::string& run_id() const { return run_id_; }
    const std::filesystem::path& dir(int worker_id) const;
    std::vector<std::filesystem::path> dirs() const { return dirs_; }

private:
    std::string run_id_;
    std::vector<std::filesystem::path> dirs_;  // index 0 is the coordinator
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct FileOutcome {
    std::filesystem::path input;
    bool ok = false;
    std::string error;
    std::filesystem::path output_dir;
    std::size_t footprints = 0;
};

struct RunSummary {
    int exit_code = 0;  // 0 success or partial, 1 every file failed, 2 config error
    std::vector<FileOutcome> files;
    PoolReport pool;
};

/// Correction outputs for one footprint file. `results` covers every input
/// footprint, sorted by shot number.
struct FileResult {
    std::vector<CorrectionResult> results;
    std::vector<Footprint> adjusted;  // footprints after the datum shift, sorted by shot number
    std::vector<ScoredFootprint> scored;  // compact records, sorted by shot number
    std::optional<Offset> orbit_offset;
    std::vector<std::pair<int, std::optional<Offset>>> beam_offsets;
    std::vector<std::string> candidate_rows;  // save_sim_points dump, merged and sorted
    PoolReport pool;
    std::vector<std::pair<std::string, double>> timings_s;
};

/// Runs the correction unit over already loaded footprints.
FileResult correct_footprints(const std::vector<Footprint>& footprints, const BoundaryIndex& boundaries,
                              const RunConfig& config, const GeoidRaster* raster = nullptr,
                              const ScratchArea* scratch = nullptr);

/// Whole pipeline over input_file or every *.jsonl in granules_dir. Writes
/// <out_dir>/<input stem>/{corrected.jsonl, accuracy_report.json,
/// scatter_*.csv[, candidates.csv]} and <out_dir>/run_manifest.json.
RunSummary run_pipeline(const RunConfig& config);

inline constexpr const char* kCandidateHeader = "shot_number,offset_index,dx,dy,x,y,score,ground_elevation,rh95";

}  // namespace geocorrect
