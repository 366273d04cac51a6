#include "geocorrect/engine.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "geocorrect/error.hpp"
#include "geocorrect/evaluation.hpp"
#include "geocorrect/io.hpp"

namespace geocorrect {

namespace fs = std::filesystem;

namespace {

constexpr const char* kScratchPrefix = "geocorrect-";
constexpr const char* kCandidateFile = "candidates.csv";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool process_alive(long pid) {
    if (pid <= 0) return false;
    if (::kill(static_cast<pid_t>(pid), 0) == 0) return true;
    return errno == EPERM;
}

std::string candidate_row(const ScoredFootprint& s, const Footprint& fp, const OffsetGrid& grid, std::size_t i) {
    std::string row = std::to_string(s.shot_number) + ',' + std::to_string(i) + ',' + format_double(grid[i].dx) + ',' +
                      format_double(grid[i].dy) + ',' + format_double(fp.x + grid[i].dx) + ',' +
                      format_double(fp.y + grid[i].dy) + ',' + format_double(s.scores[i]) + ',';
    // NaN marks a candidate whose simulation failed; leave those cells empty.
    if (s.candidate_ground[i] == s.candidate_ground[i]) row += format_double(s.candidate_ground[i]);
    row += ',';
    if (s.candidate_rh95[i] == s.candidate_rh95[i]) row += format_double(s.candidate_rh95[i]);
    return row;
}

std::pair<std::int64_t, std::int64_t> row_key(const std::string& row) {
    std::int64_t shot = 0, idx = 0;
    char comma = 0;
    std::istringstream in(row);
    in >> shot >> comma >> idx;
    return {shot, idx};
}

// Collects and removes every worker's candidate dump.
std::vector<std::string> merge_candidate_rows(const ScratchArea& scratch) {
    std::vector<std::string> rows;
    for (const auto& dir : scratch.dirs()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string name = e.path().filename().string();
            if (name.size() >= std::string(kCandidateFile).size() &&
                name.compare(name.size() - std::string(kCandidateFile).size(), std::string::npos, kCandidateFile) == 0) {
                files.push_back(e.path());
            }
        }
        for (const auto& f : files) {
            std::ifstream in(f);
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty()) rows.push_back(line);
            }
            in.close();
            fs::remove(f);
        }
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const std::string& a, const std::string& b) { return row_key(a) < row_key(b); });
    return rows;
}

CorrectionResult passthrough(const Footprint& fp, CorrectionMode mode, ResultStatus status, std::string reason) {
    CorrectionResult r;
    r.shot_number = fp.shot_number;
    r.beam_id = fp.beam_id;
    r.mode = mode;
    r.status = status;
    r.reason = std::move(reason);
    r.x = r.corrected_x = fp.x;
    r.y = r.corrected_y = fp.y;
    return r;
}

std::vector<fs::path> list_inputs(const RunConfig& config) {
    if (config.input_file) return {*config.input_file};
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(*config.granules_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

nlohmann::ordered_json config_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["input_file"] = c.input_file ? c.input_file->string() : "";
    j["granules_dir"] = c.granules_dir ? c.granules_dir->string() : "";
    j["tile_dir"] = c.tile_dir.string();
    j["out_dir"] = c.out_dir.string();
    j["mode"] = std::string(to_string(c.mode));
    j["criteria"] = c.criteria.to_string();
    j["grid_size"] = c.grid_span;
    j["grid_step"] = c.grid_step;
    j["parallel"] = c.parallel;
    j["n_processes"] = c.n_workers;
    j["time_window"] = c.time_window_s;
    j["als_algorithm"] = std::string(to_string(c.boundary_mode));
    j["als_crs"] = c.als_crs ? nlohmann::ordered_json(*c.als_crs) : nlohmann::ordered_json(nullptr);
    j["als_crs_note"] = "recorded only; no reprojection is performed";
    j["rh95_threshold"] = c.rh95_threshold_m;
    j["quality_filter"] = c.quality_filter;
    j["geoid"] = c.geoid_raster ? c.geoid_raster->string() : "";
    j["save_sim_points"] = c.save_sim_points;
    j["save_origin_location"] = c.save_origin_location;
    j["tile_buffer"] = c.tile_buffer_m;
    return j;
}

}  // namespace

void RunConfig::validate() const {
    if (input_file.has_value() == granules_dir.has_value()) {
        throw Error(ErrorKind::config, "give exactly one of --input_file and --granules_dir");
    }
    if (input_file && !fs::is_regular_file(*input_file)) {
        throw Error(ErrorKind::config, "input file not found: " + input_file->string());
    }
    if (granules_dir && !fs::is_directory(*granules_dir)) {
        throw Error(ErrorKind::config, "granules directory not found: " + granules_dir->string());
    }
    if (tile_dir.empty() || !fs::is_directory(tile_dir)) {
        throw Error(ErrorKind::config, "tile directory not found: " + tile_dir.string());
    }
    if (out_dir.empty()) throw Error(ErrorKind::config, "--out_dir is required");
    if (n_workers < 1) throw Error(ErrorKind::config, "n_processes must be >= 1");
    if (!(time_window_s >= 0.0)) throw Error(ErrorKind::config, "time_window must be >= 0");
    if (!(rh95_threshold_m >= 0.0)) throw Error(ErrorKind::config, "rh95 threshold must be >= 0");
    if (!(tile_buffer_m > 0.0)) throw Error(ErrorKind::config, "tile buffer must be positive");
    if (criteria.metrics().empty()) throw Error(ErrorKind::config, "criteria must name at least one metric");
    OffsetGrid(grid_span, grid_step);
    sim.validate();
    quality.validate();
    if (geoid_raster && !fs::is_regular_file(*geoid_raster)) {
        throw Error(ErrorKind::config, "geoid raster not found: " + geoid_raster->string());
    }
}

// ---------------------------------------------------------------------------
// Scratch
// ---------------------------------------------------------------------------

std::string make_run_id() {
    static std::atomic<unsigned> sequence{0};
    return std::to_string(::getpid()) + "-" + std::to_string(sequence.fetch_add(1));
}

std::string scratch_prefix(int worker_id) {
    if (worker_id < 0) return "co_";
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%02d_", worker_id);
    return buf;
}

fs::path allocate_scratch(const fs::path& root, const std::string& run_id, int worker_id) {
    std::string tag = worker_id < 0 ? "co" : scratch_prefix(worker_id);
    if (tag.back() == '_') tag.pop_back();
    const fs::path dir = root / (kScratchPrefix + run_id + "-" + tag);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorKind::io, "cannot create scratch directory " + dir.string() + ": " + ec.message());
    }
    const fs::path probe = dir / ".probe";
    {
        std::ofstream out(probe);
        if (!out) throw Error(ErrorKind::io, "scratch directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
    return dir;
}

std::vector<fs::path> purge_stale_scratch(const fs::path& root) {
    std::vector<fs::path> removed;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) return removed;
    const std::string prefix = kScratchPrefix;
    for (const auto& e : fs::directory_iterator(root, ec)) {
        const std::string name = e.path().filename().string();
        if (!e.is_directory() || name.rfind(prefix, 0) != 0) continue;
        const std::string rest = name.substr(prefix.size());
        const auto dash = rest.find('-');
        if (dash == std::string::npos) continue;
        long pid = 0;
        try {
            pid = std::stol(rest.substr(0, dash));
        } catch (const std::exception&) {
            continue;
        }
        if (process_alive(pid)) continue;
        fs::remove_all(e.path(), ec);
        if (!ec) removed.push_back(e.path());
    }
    std::sort(removed.begin(), removed.end());
    return removed;
}

ScratchArea::ScratchArea(const fs::path& root, int workers) : run_id_(make_run_id()) {
    dirs_.push_back(allocate_scratch(root, run_id_, -1));
    for (int w = 0; w < workers; ++w) dirs_.push_back(allocate_scratch(root, run_id_, w));
}

ScratchArea::~ScratchArea() {
    std::error_code ec;
    for (const auto& d : dirs_) fs::remove_all(d, ec);
}

const fs::path& ScratchArea::dir(int worker_id) const {
    const auto slot = static_cast<std::size_t>(worker_id + 1);
    if (slot >= dirs_.size()) throw Error(ErrorKind::config, "no scratch directory for worker");
    return dirs_[slot];
}

// ---------------------------------------------------------------------------
// Correction unit
// ---------------------------------------------------------------------------

FileResult correct_footprints(const std::vector<Footprint>& input, const BoundaryIndex& boundaries,
                              const RunConfig& config, const GeoidRaster* raster, const ScratchArea* scratch) {
    FileResult out;
    const auto t_start = Clock::now();
    const CorrectionMode mode = config.mode;
    const OffsetGrid grid(config.grid_span, config.grid_step);
    const int workers = config.worker_count();

    std::vector<Footprint> fps = input;
    std::sort(fps.begin(), fps.end(), [](const Footprint& a, const Footprint& b) { return a.shot_number < b.shot_number; });

    std::map<std::int64_t, CorrectionResult> results;
    std::map<std::int64_t, double> shifts;

    // Input unit: datum, quality, coverage.
    if (raster) {
        auto adjusted = geoid_adjust(fps, *raster);
        for (const auto& rej : adjusted.rejected) {
            results[rej.footprint.shot_number] =
                passthrough(rej.footprint, mode, ResultStatus::quality_rejected, rej.reason);
        }
        for (std::size_t i = 0; i < adjusted.kept.size(); ++i) shifts[adjusted.kept[i].shot_number] = adjusted.shifts[i];
        fps = std::move(adjusted.kept);
    }
    out.adjusted = fps;
    if (config.quality_filter) {
        auto filtered = apply_quality_filters(fps, config.quality);
        for (const auto& rej : filtered.rejected) {
            results[rej.footprint.shot_number] =
                passthrough(rej.footprint, mode, ResultStatus::quality_rejected, rej.reason);
        }
        fps = std::move(filtered.kept);
    }
    std::vector<Footprint> covered;
    std::set<std::string> needed_tiles;
    const double search_side = 2.0 * (grid.span() / 2.0 + config.sim.footprint_radius());
    for (const auto& fp : fps) {
        if (select_tiles(boundaries.boundaries, fp, config.tile_buffer_m).empty()) {
            results[fp.shot_number] = passthrough(fp, mode, ResultStatus::out_of_coverage, "no intersecting tile");
            continue;
        }
        for (auto& t : select_tiles(boundaries.boundaries, fp, search_side)) needed_tiles.insert(std::move(t));
        covered.push_back(fp);
    }

    std::vector<PointRecord> points;
    for (const auto& path : needed_tiles) {
        try {
            auto p = read_points(path);
            points.insert(points.end(), p.begin(), p.end());
        } catch (const Error& e) {
            std::cerr << "warning: skipping tile " << path << ": " << e.what() << '\n';
        }
    }
    const PointIndex index(std::move(points));
    out.timings_s.emplace_back("input", seconds_since(t_start));

    // Simulation + scoring, one footprint per work item.
    const auto t_score = Clock::now();
    auto score_one = [&](const Footprint& fp, int worker_id) {
        ScoredFootprint s = process_footprint(fp, index, grid, config.sim, config.criteria, config.rh95_threshold_m,
                                              config.save_sim_points);
        if (config.save_sim_points && scratch && s.valid) {
            const fs::path file = scratch->dir(worker_id) / (scratch_prefix(worker_id) + kCandidateFile);
            std::ofstream dump(file, std::ios::app);
            if (!dump) throw Error(ErrorKind::io, "cannot write " + file.string());
            for (std::size_t i = 0; i < grid.size(); ++i) dump << candidate_row(s, fp, grid, i) << '\n';
        }
        s.candidate_ground.clear();
        s.candidate_rh95.clear();
        return s;
    };
    auto score_failed = [](const Footprint& fp) {
        ScoredFootprint s;
        s.shot_number = fp.shot_number;
        s.beam_id = fp.beam_id;
        s.delta_time = fp.delta_time;
        s.reason = "worker failure";
        return s;
    };
    out.scored = worker_pool_map<Footprint, ScoredFootprint>(std::span<const Footprint>(covered), workers, score_one,
                                                             score_failed, &out.pool);
    std::sort(out.scored.begin(), out.scored.end(),
              [](const ScoredFootprint& a, const ScoredFootprint& b) { return a.shot_number < b.shot_number; });
    out.timings_s.emplace_back("score", seconds_since(t_score));

    // Aggregation on the coordinator.
    const auto t_agg = Clock::now();
    struct Choice {
        std::size_t fp_index;
        std::size_t offset_index;
        int cluster_size;
    };
    std::vector<Choice> choices;
    const auto& scored = out.scored;
    auto mark = [&](std::size_t i, ResultStatus status, const std::string& reason) {
        results[covered[i].shot_number] = passthrough(covered[i], mode, status, reason);
    };
    // covered and scored share shot order
    if (mode == CorrectionMode::orbit) {
        std::optional<Aggregate> agg;
        try {
            agg = aggregate_orbit(scored, grid);
            out.orbit_offset = agg->offset;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::nothing_to_correct) throw;
        }
        for (std::size_t i = 0; i < scored.size(); ++i) {
            if (!scored[i].valid) {
                mark(i, ResultStatus::filtered, scored[i].reason);
            } else if (agg) {
                choices.push_back({i, agg->index, 1});
            }
        }
    } else if (mode == CorrectionMode::beam) {
        const auto per_beam = aggregate_beam(scored, grid);
        for (const auto& [beam, agg] : per_beam) {
            out.beam_offsets.emplace_back(beam, agg ? std::optional<Offset>(agg->offset) : std::nullopt);
        }
        for (std::size_t i = 0; i < scored.size(); ++i) {
            const auto& agg = per_beam.at(scored[i].beam_id);
            if (!scored[i].valid) {
                mark(i, ResultStatus::filtered, scored[i].reason);
            } else if (!agg) {
                mark(i, ResultStatus::uncorrected, "uncorrected beam");
            } else {
                choices.push_back({i, agg->index, 1});
            }
        }
    } else {
        const auto clusters = cluster_footprints(scored, ClusterWindow{config.time_window_s});
        const auto per_fp = aggregate_footprint(scored, clusters, grid);
        for (std::size_t i = 0; i < scored.size(); ++i) {
            const auto it = per_fp.find(scored[i].shot_number);
            if (!scored[i].valid) {
                mark(i, ResultStatus::filtered, scored[i].reason);
            } else if (it == per_fp.end()) {
                mark(i, ResultStatus::uncorrected, "no cluster");
            } else {
                choices.push_back({i, it->second.aggregate.index, it->second.cluster_size});
            }
        }
    }
    out.timings_s.emplace_back("aggregate", seconds_since(t_agg));

    // Output unit: resimulate at the chosen offsets.
    const auto t_resim = Clock::now();
    auto resim_one = [&](const Choice& c, int) {
        const Footprint& fp = covered[c.fp_index];
        CorrectionResult r = resimulate_and_emit(fp, grid[c.offset_index], index, config.sim, mode);
        r.final_score = scored[c.fp_index].scores[c.offset_index];
        r.cluster_size = c.cluster_size;
        if (config.save_origin_location) {
            try {
                r.origin = simulate_waveform(index, fp.x, fp.y, config.sim);
            } catch (const Error&) {
                // nothing under the reported position
            }
        }
        return r;
    };
    auto resim_failed = [&](const Choice& c) {
        CorrectionResult r = passthrough(covered[c.fp_index], mode, ResultStatus::discarded, "worker failure");
        r.chosen_offset = grid[c.offset_index];
        return r;
    };
    auto finals = worker_pool_map<Choice, CorrectionResult>(std::span<const Choice>(choices), workers, resim_one,
                                                            resim_failed, &out.pool);
    for (auto& r : finals) results[r.shot_number] = std::move(r);
    out.timings_s.emplace_back("resimulate", seconds_since(t_resim));

    for (auto& [shot, r] : results) {
        if (auto it = shifts.find(shot); it != shifts.end()) r.datum_shift = it->second;
        out.results.push_back(std::move(r));
    }
    if (config.save_sim_points && scratch) out.candidate_rows = merge_candidate_rows(*scratch);
    out.timings_s.emplace_back("total", seconds_since(t_start));
    return out;
}

RunSummary run_pipeline(const RunConfig& config) {
    RunSummary summary;
    std::vector<fs::path> inputs;
    std::optional<GeoidRaster> raster;
    BoundaryIndex boundaries;
    std::unique_ptr<ScratchArea> scratch;
    try {
        config.validate();
        inputs = list_inputs(config);
        if (config.geoid_raster) raster = read_geoid_raster(*config.geoid_raster);
        fs::create_directories(config.out_dir);
        const fs::path root = config.scratch_root.value_or(fs::temp_directory_path());
        fs::create_directories(root);
        for (const auto& p : purge_stale_scratch(root)) std::cerr << "purged stale scratch " << p << '\n';
        scratch = std::make_unique<ScratchArea>(root, config.worker_count());
        boundaries = build_boundary_index(config.tile_dir, config.boundary_mode);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        summary.exit_code = 2;
        return summary;
    }

    nlohmann::ordered_json manifest;
    manifest["config"] = config_json(config);
    manifest["workers"] = config.worker_count();
    manifest["tiles"] = boundaries.boundaries.size();
    manifest["invalid_tiles"] = boundaries.invalid;
    manifest["files"] = nlohmann::ordered_json::array();

    std::size_t ok = 0;
    for (const auto& input : inputs) {
        FileOutcome outcome;
        outcome.input = input;
        nlohmann::ordered_json fj;
        fj["input"] = input.string();
        try {
            const auto footprints = read_footprint_file(input);
            outcome.footprints = footprints.size();
            FileResult fr = correct_footprints(footprints, boundaries, config, raster ? &*raster : nullptr, scratch.get());
            const fs::path dir = config.out_dir / input.stem();
            fs::create_directories(dir);
            write_correction_output(dir / "corrected.jsonl", fr.results);
            write_report(dir, build_report(fr.results, fr.adjusted));
            if (config.save_sim_points) {
                std::ofstream csv(dir / kCandidateFile, std::ios::binary);
                csv << kCandidateHeader << '\n';
                for (const auto& row : fr.candidate_rows) csv << row << '\n';
                if (!csv) throw Error(ErrorKind::io, "cannot write candidate dump in " + dir.string());
            }
            outcome.ok = true;
            outcome.output_dir = dir;
            ++ok;

            std::map<std::string, std::size_t> counts;
            for (const auto& r : fr.results) ++counts[std::string(to_string(r.status))];
            fj["status"] = "ok";
            fj["output_dir"] = dir.string();
            fj["footprints"] = footprints.size();
            fj["status_counts"] = counts;
            if (fr.orbit_offset) fj["orbit_offset"] = {fr.orbit_offset->dx, fr.orbit_offset->dy};
            if (!fr.beam_offsets.empty()) {
                nlohmann::ordered_json beams = nlohmann::ordered_json::object();
                for (const auto& [beam, off] : fr.beam_offsets) {
                    beams[std::to_string(beam)] =
                        off ? nlohmann::ordered_json({off->dx, off->dy}) : nlohmann::ordered_json(nullptr);
                }
                fj["beam_offsets"] = beams;
            }
            fj["worker_retries"] = fr.pool.retried;
            fj["worker_failures"] = fr.pool.failed;
            nlohmann::ordered_json timings;
            for (const auto& [k, v] : fr.timings_s) timings[k] = v;
            fj["timings_s"] = timings;
            summary.pool.retried += fr.pool.retried;
            summary.pool.failed += fr.pool.failed;
        } catch (const std::exception& e) {
            outcome.error = e.what();
            fj["status"] = "error";
            fj["error"] = e.what();
            std::cerr << "error: " << input.string() << ": " << e.what() << '\n';
        }
        manifest["files"].push_back(fj);
        summary.files.push_back(std::move(outcome));
    }
    manifest["succeeded"] = ok;
    manifest["failed"] = inputs.size() - ok;

    std::ofstream mf(config.out_dir / "run_manifest.json");
    mf << manifest.dump(2) << '\n';
    summary.exit_code = ok > 0 ? 0 : 1;
    return summary;
}

}  // namespace geocorrect
