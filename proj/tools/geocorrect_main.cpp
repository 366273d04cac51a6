// geocorrect: horizontal geolocation correction of waveform lidar footprints
// against airborne point-cloud tiles.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geocorrect/engine.hpp"
#include "geocorrect/error.hpp"

int main(int argc, char** argv) {
    using namespace geocorrect;
    RunConfig cfg;
    std::string input_file, granules_dir, tile_dir, out_dir, mode = "orbit", criteria = "wave_pearson";
    std::string algorithm = "convex", als_crs, geoid, scratch;

    CLI::App app{"Correct footprint geolocation by waveform matching against point-cloud tiles"};
    app.add_option("--input_file", input_file, "Footprint file (JSON Lines)");
    app.add_option("--granules_dir", granules_dir, "Directory of footprint files (*.jsonl)");
    app.add_option("--las_dir,--tile_dir", tile_dir, "Directory of point-cloud tiles (.las, .xyz, .txt)")->required();
    app.add_option("--out_dir", out_dir, "Output directory")->required();
    app.add_flag("--save_sim_points", cfg.save_sim_points, "Write every simulated candidate to candidates.csv");
    app.add_flag("--save_origin_location", cfg.save_origin_location,
                 "Also simulate at the reported location and store it with each result");
    app.add_option("--mode", mode, "orbit, beam or footprint")->default_val("orbit");
    app.add_option("--criteria", criteria, "Space-separated metrics: wave_pearson wave_spearman kl wave_distance "
                                           "rh_distance terrain")
        ->default_val("wave_pearson");
    app.add_option("--grid_size", cfg.grid_span, "Candidate grid span in metres")->default_val(30.0);
    app.add_option("--grid_step", cfg.grid_step, "Candidate grid step in metres")->default_val(1.0);
    app.add_flag("--parallel", cfg.parallel, "Process footprints on a worker pool");
    app.add_option("--n_processes", cfg.n_workers, "Workers when --parallel is set")->default_val(8);
    app.add_option("--time_window", cfg.time_window_s, "Footprint-mode cluster window in seconds (0: no clustering)")
        ->default_val(0.04);
    app.add_option("--als_crs", als_crs, "CRS code of the tiles (recorded in the manifest, not applied)");
    app.add_option("--als_algorithm", algorithm, "Tile boundary: convex or simple")->default_val("convex");

    app.add_option("--rh95_threshold", cfg.rh95_threshold_m, "RH95 change threshold in metres")->default_val(10.0);
    app.add_option("--geoid", geoid, "ESRI ASCII grid of vertical datum differences");
    app.add_option("--tile_buffer", cfg.tile_buffer_m, "Side of the tile-selection square in metres")
        ->default_val(50.0);
    app.add_option("--scratch_dir", scratch, "Root for per-worker scratch directories");
    bool no_quality = false, allow_degraded = false, any_quality_flag = false, allow_day = false;
    bool no_mode_check = false;
    app.add_flag("--no_quality_filter", no_quality, "Skip all footprint quality checks");
    app.add_flag("--allow_degraded", allow_degraded, "Do not require degrade_flag == 0");
    app.add_flag("--any_quality_flag", any_quality_flag, "Do not require quality_flag == 1");
    app.add_flag("--allow_day", allow_day, "Do not require solar elevation < 0");
    app.add_flag("--no_mode_check", no_mode_check, "Skip the multi-mode check for tall canopy");
    app.add_option("--min_sensitivity", cfg.quality.min_sensitivity)->default_val(0.9);
    app.add_option("--max_rh95", cfg.quality.max_rh95_m)->default_val(30.0);
    app.add_option("--max_dem_diff", cfg.quality.max_dem_diff_m)->default_val(50.0);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!input_file.empty()) cfg.input_file = input_file;
        if (!granules_dir.empty()) cfg.granules_dir = granules_dir;
        cfg.tile_dir = tile_dir;
        cfg.out_dir = out_dir;
        cfg.mode = parse_correction_mode(mode);
        cfg.criteria = MetricSet::parse(criteria);
        cfg.boundary_mode = parse_boundary_mode(algorithm);
        if (!als_crs.empty()) cfg.als_crs = als_crs;
        if (!geoid.empty()) cfg.geoid_raster = geoid;
        if (!scratch.empty()) cfg.scratch_root = scratch;
        cfg.quality_filter = !no_quality;
        cfg.quality.require_degrade_zero = !allow_degraded;
        cfg.quality.require_quality_one = !any_quality_flag;
        cfg.quality.require_night = !allow_day;
        cfg.quality.forest_mode_check = !no_mode_check;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    const RunSummary summary = run_pipeline(cfg);
    for (const auto& f : summary.files) {
        if (f.ok) {
            std::cout << f.input.string() << ": " << f.footprints << " footprints -> " << f.output_dir.string() << '\n';
        } else {
            std::cout << f.input.string() << ": failed (" << f.error << ")\n";
        }
    }
    return summary.exit_code;
}
