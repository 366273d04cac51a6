#include "geocorrect/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "geocorrect/error.hpp"

namespace geocorrect {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Distinct streams per purpose; constants are arbitrary odd numbers.
constexpr std::uint64_t kGroundStream = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kCanopyStream = 0xC2B2AE3D27D4EB4Full;

}  // namespace

SceneRng::SceneRng(std::uint64_t seed) : engine_(seed) {}

double SceneRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SceneRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
}

double Terrain::height(double x, double y) const {
    switch (kind) {
        case Kind::flat: return z0;
        case Kind::ramp: return z0 + gradient_x * x + gradient_y * y;
        case Kind::sine: return z0 + amplitude * std::sin(kTwoPi * x / wavelength) * std::cos(kTwoPi * y / wavelength);
    }
    return z0;
}

void SceneSpec::validate() const {
    if (!(width > 0.0) || !(length > 0.0)) throw Error(ErrorKind::config, "scene extent has zero area");
    if (!(ground_density > 0.0)) throw Error(ErrorKind::config, "ground density must be positive");
    if (!(tile_width > 0.0) || !(tile_length > 0.0)) throw Error(ErrorKind::config, "tile size must be positive");
    if (terrain.kind == Terrain::Kind::sine && !(terrain.wavelength > 0.0)) {
        throw Error(ErrorKind::config, "terrain wavelength must be positive");
    }
    for (const auto& t : trees) {
        if (!(t.point_density > 0.0) || !(t.crown_radius > 0.0)) {
            throw Error(ErrorKind::config, "tree density and crown radius must be positive");
        }
        if (t.x < x_min || t.x > x_min + width || t.y < y_min || t.y > y_min + length) {
            throw Error(ErrorKind::config, "tree outside the scene extent");
        }
    }
}

std::vector<Tree> random_trees(const SceneSpec& scene, int n, double min_height, double max_height,
                               double min_crown, double max_crown, double density, std::uint64_t seed,
                               double margin) {
    SceneRng rng(seed);
    std::vector<Tree> trees;
    trees.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int i = 0; i < n; ++i) {
        Tree t;
        t.x = rng.uniform(scene.x_min + margin, scene.x_min + scene.width - margin);
        t.y = rng.uniform(scene.y_min + margin, scene.y_min + scene.length - margin);
        t.height = rng.uniform(min_height, max_height);
        t.crown_radius = rng.uniform(min_crown, max_crown);
        t.point_density = density;
        trees.push_back(t);
    }
    return trees;
}

std::vector<PointRecord> generate_scene_points(const SceneSpec& spec) {
    spec.validate();
    std::vector<PointRecord> pts;
    const auto n_ground = static_cast<std::size_t>(std::llround(spec.ground_density * spec.width * spec.length));
    pts.reserve(n_ground);

    SceneRng ground(spec.seed ^ kGroundStream);
    for (std::size_t i = 0; i < n_ground; ++i) {
        const double x = ground.uniform(spec.x_min, spec.x_min + spec.width);
        const double y = ground.uniform(spec.y_min, spec.y_min + spec.length);
        pts.push_back({x, y, spec.terrain.height(x, y), std::uint8_t{2}});
    }

    SceneRng canopy(spec.seed ^ kCanopyStream);
    for (const auto& t : spec.trees) {
        const auto n = static_cast<std::size_t>(
            std::llround(t.point_density * std::numbers::pi * t.crown_radius * t.crown_radius));
        for (std::size_t i = 0; i < n; ++i) {
            const double r = t.crown_radius * std::sqrt(canopy.uniform());
            const double a = kTwoPi * canopy.uniform();
            const double x = std::clamp(t.x + r * std::cos(a), spec.x_min, spec.x_min + spec.width);
            const double y = std::clamp(t.y + r * std::sin(a), spec.y_min, spec.y_min + spec.length);
            const double g = spec.terrain.height(x, y);
            const double z = std::max(g + t.height + t.crown_sigma() * canopy.normal(), g + 0.5);
            pts.push_back({x, y, z, std::uint8_t{5}});
        }
    }
    return pts;
}

std::vector<std::filesystem::path> generate_scene(const SceneSpec& spec, const std::filesystem::path& dir) {
    const auto pts = generate_scene_points(spec);
    std::filesystem::create_directories(dir);
    const int cols = static_cast<int>(std::ceil(spec.width / spec.tile_width - 1e-9));
    const int rows = static_cast<int>(std::ceil(spec.length / spec.tile_length - 1e-9));
    std::map<std::pair<int, int>, std::vector<PointRecord>> tiles;
    for (const auto& p : pts) {
        const int c = std::clamp(static_cast<int>(std::floor((p.x - spec.x_min) / spec.tile_width)), 0, cols - 1);
        const int r = std::clamp(static_cast<int>(std::floor((p.y - spec.y_min) / spec.tile_length)), 0, rows - 1);
        tiles[{c, r}].push_back(p);
    }
    std::vector<std::filesystem::path> paths;
    for (const auto& [key, tile_pts] : tiles) {
        char name[64];
        std::snprintf(name, sizeof name, "tile_%03d_%03d.las", key.first, key.second);
        const auto path = dir / name;
        write_las_tile(path, tile_pts);
        paths.push_back(path);
    }
    return paths;
}

void JitterSpec::validate() const {
    if (!(frequency >= 0.0)) throw Error(ErrorKind::config, "jitter frequency must be >= 0");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::config, "jitter noise sigma must be >= 0");
}

Offset JitterSpec::at(double t) const {
    const double s = amplitude * std::sin(kTwoPi * frequency * t + phase);
    return {constant_dx + s * std::cos(direction), constant_dy + s * std::sin(direction)};
}

std::vector<double> centred_beams(const SceneSpec& scene, int count, double spacing) {
    std::vector<double> xs;
    const double centre = scene.x_min + scene.width / 2.0;
    for (int i = 0; i < count; ++i) xs.push_back(centre + (i - (count - 1) / 2.0) * spacing);
    return xs;
}

int shots_that_fit(const SceneSpec& scene, const OrbitSpec& orbit, double margin) {
    const double spacing = orbit.ground_speed / orbit.shot_rate_hz;
    const double usable = scene.y_min + scene.length - margin - orbit.y_start;
    return usable < 0.0 ? 0 : static_cast<int>(std::floor(usable / spacing)) + 1;
}

OrbitOutput generate_orbit(const PointIndex& points, const SceneSpec& scene, const OrbitSpec& orbit,
                           const JitterSpec& jitter, const SimParams& params) {
    jitter.validate();
    if (orbit.beam_x.empty() || orbit.shots_per_beam <= 0) throw Error(ErrorKind::config, "orbit has no shots");
    if (!(orbit.shot_rate_hz > 0.0)) throw Error(ErrorKind::config, "shot rate must be positive");
    SceneRng noise(jitter.seed);
    OrbitOutput out;
    const auto n_beams = static_cast<std::int64_t>(orbit.beam_x.size());
    for (int k = 0; k < orbit.shots_per_beam; ++k) {
        const double since_start = k / orbit.shot_rate_hz;
        const double t = orbit.t0 + since_start;
        const double y_true = orbit.y_start + orbit.ground_speed * since_start;
        // One platform, so every beam shares the deterministic jitter at t.
        const Offset base = jitter.at(t);
        for (std::size_t b = 0; b < orbit.beam_x.size(); ++b) {
            const double x_true = orbit.beam_x[b];
            Offset j = base;
            if (jitter.noise_sigma > 0.0) {
                j.dx += jitter.noise_sigma * noise.normal();
                j.dy += jitter.noise_sigma * noise.normal();
            }
            SimulatedMetrics sim;
            try {
                sim = simulate_waveform(points, x_true, y_true, params);
            } catch (const Error& e) {
                throw Error(ErrorKind::config, "track outside scene at (" + format_double(x_true) + ", " +
                                                   format_double(y_true) + "): " + e.what());
            }
            Footprint fp;
            fp.shot_number = orbit.first_shot_number + k * n_beams + static_cast<std::int64_t>(b);
            fp.beam_id = static_cast<int>(b);
            fp.delta_time = t;
            fp.x = x_true + j.dx;
            fp.y = y_true + j.dy;
            fp.elev_lowestmode = sim.ground_elevation;
            fp.rh = sim.rh;
            fp.waveform = sim.waveform;
            fp.sensitivity = 0.98;
            fp.quality_flag = 1;
            fp.degrade_flag = 0;
            fp.solar_elevation = -20.0;
            const double rh95 = sim.rh.at(95);
            fp.num_detected_modes = std::max(count_modes(sim.waveform, params.noise_floor), rh95 >= 5.0 ? 2 : 1);
            fp.dem_elevation = scene.terrain.height(x_true, y_true);
            out.footprints.push_back(std::move(fp));
            out.truth.push_back({out.footprints.back().shot_number, -j.dx, -j.dy});
        }
    }
    return out;
}

void write_truth_csv(const std::filesystem::path& path, const std::vector<TruthRecord>& truth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << "shot_number,dx,dy\n";
    for (const auto& t : truth) out << t.shot_number << ',' << format_double(t.dx) << ',' << format_double(t.dy) << '\n';
}

std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::vector<TruthRecord> out;
    std::string line;
    std::getline(in, line);  // header
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TruthRecord t;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> t.shot_number >> c1 >> t.dx >> c2 >> t.dy) || c1 != ',' || c2 != ',') {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": malformed truth row");
        }
        out.push_back(t);
    }
    return out;
}

PointIndex load_tiles(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && is_tile_file(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<PointRecord> pts;
    for (const auto& f : files) {
        auto p = read_points(f);
        pts.insert(pts.end(), p.begin(), p.end());
    }
    return PointIndex(std::move(pts));
}

}  // namespace geocorrect
