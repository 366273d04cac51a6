#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "geocorrect/core.hpp"
#include "geocorrect/pointcloud.hpp"
#include "geocorrect/simulator.hpp"

namespace geocorrect {

/// Small deterministic generator: 53-bit uniforms from mt19937_64 and
/// Box-Muller normals, so streams do not depend on the standard library's
/// distribution implementations.
class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed);
    double uniform();  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct Terrain {
    enum class Kind { flat, ramp, sine };
    Kind kind = Kind::flat;
    double z0 = 0.0;
    double gradient_x = 0.0;  // ramp, m per m
    double gradient_y = 0.0;
    double amplitude = 0.0;   // sine: z0 + A sin(2 pi x / L) cos(2 pi y / L)
    double wavelength = 100.0;

    double height(double x, double y) const;
};

struct Tree {
    double x = 0.0;
    double y = 0.0;
    double height = 15.0;        // crown centre above ground
    double crown_radius = 3.0;   // horizontal; vertical sigma is half of it
    double point_density = 4.0;  // points per m^2 of crown disc

    double crown_sigma() const { return crown_radius / 2.0; }
};

struct SceneSpec {
    double x_min = 0.0;
    double y_min = 0.0;
    double width = 200.0;
    double length = 3000.0;
    Terrain terrain;
    std::vector<Tree> trees;
    double ground_density = 1.0;  // points per m^2
    std::uint64_t seed = 1;
    double tile_width = 200.0;
    double tile_length = 500.0;

    /// Throws Error(config) for a zero-area extent or non-positive density.
    void validate() const;
};

/// n trees placed uniformly inside the extent shrunk by `margin`, with
/// heights and crown radii uniform in the given ranges. Uses its own stream.
std::vector<Tree> random_trees(const SceneSpec& scene, int n, double min_height, double max_height,
                               double min_crown, double max_crown, double density, std::uint64_t seed,
                               double margin = 0.0);

/// Ground points (exactly round(density * area), terrain surface) followed by
/// crown points. Ground and canopy use independent streams derived from the
/// seed, so editing the tree list leaves the ground points unchanged.
std::vector<PointRecord> generate_scene_points(const SceneSpec& spec);

/// Writes LAS tiles named tile_<col>_<row>.las and returns their paths.
std::vector<std::filesystem::path> generate_scene(const SceneSpec& spec, const std::filesystem::path& dir);

struct JitterSpec {
    double constant_dx = 0.0;
    double constant_dy = 0.0;
    double amplitude = 0.0;    // m
    double frequency = 0.0;    // Hz
    double phase = 0.0;        // rad
    double direction = 0.0;    // rad from +x
    double noise_sigma = 0.0;  // m, per axis
    std::uint64_t seed = 7;

    void validate() const;
    /// Deterministic part of the jitter at time t.
    Offset at(double t) const;
};

struct OrbitSpec {
    std::vector<double> beam_x;  // across-track position of each beam
    double y_start = 0.0;
    int shots_per_beam = 100;
    double shot_rate_hz = 242.0;
    double ground_speed = 7000.0;  // m/s along +y
    double t0 = 0.0;
    std::int64_t first_shot_number = 1000000;
};

/// Beam x positions evenly spaced and centred in the scene.
std::vector<double> centred_beams(const SceneSpec& scene, int count, double spacing = 20.0);

/// Shots per beam that fit between the two along-track margins.
int shots_that_fit(const SceneSpec& scene, const OrbitSpec& orbit, double margin);

struct TruthRecord {
    std::int64_t shot_number = 0;
    double dx = 0.0;  // correcting offset (minus the injected jitter)
    double dy = 0.0;
};

struct OrbitOutput {
    std::vector<Footprint> footprints;
    std::vector<TruthRecord> truth;
};

/// Shot k of beam b fires at t = t0 + k / rate from (beam_x[b], y_start +
/// speed * k / rate). Its waveform, ground and RH come from a simulation at
/// that true position over `points`; its reported coordinates add the jitter.
/// Throws Error(config) if a shot has no points under it.
OrbitOutput generate_orbit(const PointIndex& points, const SceneSpec& scene, const OrbitSpec& orbit,
                           const JitterSpec& jitter, const SimParams& params);

void write_truth_csv(const std::filesystem::path& path, const std::vector<TruthRecord>& truth);
std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& path);

/// Reads every tile in dir back into one index.
PointIndex load_tiles(const std::filesystem::path& dir);

}  // namespace geocorrect
