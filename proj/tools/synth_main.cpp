// geocorrect-synth: synthetic tiles, footprints and truth offsets for
// exercising the correction engine.

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

#include <CLI11.hpp>

#include "geocorrect/error.hpp"
#include "geocorrect/io.hpp"
#include "geocorrect/synthgen.hpp"

int main(int argc, char** argv) {
    using namespace geocorrect;
    SceneSpec scene;
    OrbitSpec orbit;
    JitterSpec jitter;
    std::string out_dir, terrain = "sine";
    int n_trees = 150, beams = 4, shots = 0;
    double beam_spacing = 20.0, margin = 60.0;
    double tree_min = 8.0, tree_max = 22.0, crown_min = 2.0, crown_max = 5.0, crown_density = 3.0;
    double direction_deg = 0.0;

    CLI::App app{"Generate a synthetic scene, an orbit of footprints and their truth offsets"};
    app.add_option("--out_dir", out_dir, "Writes tiles/, footprints.jsonl and truth_offsets.csv here")->required();
    app.add_option("--width", scene.width)->default_val(200.0);
    app.add_option("--length", scene.length)->default_val(3000.0);
    app.add_option("--terrain", terrain, "flat, ramp or sine")->default_val("sine");
    app.add_option("--z0", scene.terrain.z0)->default_val(100.0);
    app.add_option("--amplitude", scene.terrain.amplitude, "Sine terrain amplitude (m)")->default_val(5.0);
    app.add_option("--wavelength", scene.terrain.wavelength, "Sine terrain wavelength (m)")->default_val(120.0);
    app.add_option("--gradient_x", scene.terrain.gradient_x)->default_val(0.0);
    app.add_option("--gradient_y", scene.terrain.gradient_y)->default_val(0.0);
    app.add_option("--ground_density", scene.ground_density, "Ground points per m^2")->default_val(1.0);
    app.add_option("--trees", n_trees)->default_val(150);
    app.add_option("--tree_min_height", tree_min)->default_val(8.0);
    app.add_option("--tree_max_height", tree_max)->default_val(22.0);
    app.add_option("--crown_min", crown_min)->default_val(2.0);
    app.add_option("--crown_max", crown_max)->default_val(5.0);
    app.add_option("--crown_density", crown_density, "Crown points per m^2")->default_val(3.0);
    app.add_option("--seed", scene.seed)->default_val(1);
    app.add_option("--beams", beams)->default_val(4);
    app.add_option("--beam_spacing", beam_spacing)->default_val(20.0);
    app.add_option("--shots", shots, "Shots per beam (0: as many as fit)")->default_val(0);
    app.add_option("--margin", margin, "Along-track margin kept free of shots (m)")->default_val(60.0);
    app.add_option("--ground_speed", orbit.ground_speed)->default_val(7000.0);
    app.add_option("--jitter_dx", jitter.constant_dx)->default_val(0.0);
    app.add_option("--jitter_dy", jitter.constant_dy)->default_val(0.0);
    app.add_option("--jitter_amplitude", jitter.amplitude)->default_val(0.0);
    app.add_option("--jitter_frequency", jitter.frequency, "Hz")->default_val(0.0);
    app.add_option("--jitter_phase", jitter.phase, "rad")->default_val(0.0);
    app.add_option("--jitter_direction", direction_deg, "Degrees from +x")->default_val(0.0);
    app.add_option("--jitter_noise", jitter.noise_sigma, "White noise sigma per axis (m)")->default_val(0.0);
    app.add_option("--jitter_seed", jitter.seed)->default_val(7);
    CLI11_PARSE(app, argc, argv);

    try {
        if (terrain == "flat") {
            scene.terrain.kind = Terrain::Kind::flat;
        } else if (terrain == "ramp") {
            scene.terrain.kind = Terrain::Kind::ramp;
        } else if (terrain == "sine") {
            scene.terrain.kind = Terrain::Kind::sine;
        } else {
            throw Error(ErrorKind::config, "unknown terrain '" + terrain + "'");
        }
        jitter.direction = direction_deg * std::numbers::pi / 180.0;
        scene.trees = random_trees(scene, n_trees, tree_min, tree_max, crown_min, crown_max, crown_density,
                                   scene.seed + 1);
        const std::filesystem::path out(out_dir);
        const auto tiles = generate_scene(scene, out / "tiles");

        orbit.beam_x = centred_beams(scene, beams, beam_spacing);
        orbit.y_start = scene.y_min + margin;
        orbit.shots_per_beam = shots > 0 ? shots : shots_that_fit(scene, orbit, margin);
        const SimParams params;
        const auto generated = generate_orbit(load_tiles(out / "tiles"), scene, orbit, jitter, params);
        write_footprint_file(out / "footprints.jsonl", generated.footprints);
        write_truth_csv(out / "truth_offsets.csv", generated.truth);
        std::cout << tiles.size() << " tiles, " << generated.footprints.size() << " footprints written to "
                  << out.string() << '\n';
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::config ? 2 : 1;
    }
    return 0;
}
