#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "geocorrect/error.hpp"
#include "geocorrect/synthgen.hpp"
#include "support/tempdir.hpp"

using namespace geocorrect;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SceneSpec small_scene() {
    SceneSpec s;
    s.width = 120;
    s.length = 600;
    s.terrain.kind = Terrain::Kind::sine;
    s.terrain.z0 = 100;
    s.terrain.amplitude = 5;
    s.ground_density = 1;
    s.tile_width = 60;
    s.tile_length = 200;
    s.trees = random_trees(s, 40, 8, 20, 2, 5, 3, 3, 5);
    return s;
}

}  // namespace

TEST(Scene, FlatGroundCountIsExact) {
    SceneSpec s;
    s.width = 100;
    s.length = 100;
    s.ground_density = 4;
    const auto pts = generate_scene_points(s);
    EXPECT_EQ(pts.size(), 40000u);
    for (const auto& p : pts) {
        EXPECT_EQ(p.z, 0.0);
        EXPECT_EQ(p.classification, std::uint8_t{2});
        EXPECT_GE(p.x, 0.0);
        EXPECT_LE(p.x, 100.0);
    }
}

TEST(Scene, TreeReachesItsHeight) {
    SceneSpec s;
    s.width = 60;
    s.length = 60;
    s.trees.push_back(Tree{30, 30, 15, 3, 4});
    const auto pts = generate_scene_points(s);
    double top = 0;
    for (const auto& p : pts) top = std::max(top, p.z);
    EXPECT_GT(top, 15.0);
    EXPECT_LE(top, 15.0 + 6 * s.trees[0].crown_sigma());
}

TEST(Scene, TerrainShapes) {
    Terrain t;
    t.kind = Terrain::Kind::ramp;
    t.z0 = 10;
    t.gradient_x = 0.1;
    t.gradient_y = -0.2;
    EXPECT_DOUBLE_EQ(t.height(10, 5), 10 + 1 - 1);
    t.kind = Terrain::Kind::sine;
    t.amplitude = 5;
    t.wavelength = 100;
    EXPECT_NEAR(t.height(25, 0), 15.0, 1e-12);
    EXPECT_NEAR(t.height(0, 0), 10.0, 1e-12);
}

TEST(Scene, SameSeedGivesIdenticalTiles) {
    TempDir a, b;
    const auto s = small_scene();
    const auto fa = generate_scene(s, a.path());
    const auto fb = generate_scene(s, b.path());
    ASSERT_EQ(fa.size(), 6u);
    ASSERT_EQ(fa.size(), fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        EXPECT_EQ(fa[i].filename(), fb[i].filename());
        EXPECT_EQ(slurp(fa[i]), slurp(fb[i]));
    }
    EXPECT_EQ(load_tiles(a.path()).points().size(), generate_scene_points(s).size());
    SceneSpec other = s;
    other.seed = 2;
    TempDir c;
    const auto fc = generate_scene(other, c.path());
    EXPECT_NE(slurp(fa[0]), slurp(fc[0]));
}

TEST(Scene, RejectsZeroArea) {
    SceneSpec s;
    s.width = 0;
    EXPECT_THROW(generate_scene_points(s), Error);
}

TEST(Orbit, ConstantJitterTruthAndTiming) {
    const auto s = small_scene();
    const PointIndex idx(generate_scene_points(s));
    OrbitSpec o;
    o.beam_x = centred_beams(s, 2);
    o.y_start = 60;
    o.shots_per_beam = shots_that_fit(s, o, 60);
    ASSERT_GT(o.shots_per_beam, 10);
    JitterSpec j;
    j.constant_dx = 7;
    j.constant_dy = -4;
    const auto out = generate_orbit(idx, s, o, j, SimParams{});
    ASSERT_EQ(out.footprints.size(), 2u * o.shots_per_beam);
    for (std::size_t i = 0; i < out.footprints.size(); ++i) {
        const auto& fp = out.footprints[i];
        const auto& t = out.truth[i];
        EXPECT_EQ(t.shot_number, fp.shot_number);
        EXPECT_EQ(t.dx, -7.0);
        EXPECT_EQ(t.dy, 4.0);
        const int k = static_cast<int>(i / 2);
        EXPECT_NEAR(fp.delta_time * 242.0, k, 1e-9);
        EXPECT_NEAR(fp.x + t.dx, o.beam_x[i % 2], 1e-9);
        EXPECT_NEAR(fp.y + t.dy, o.y_start + o.ground_speed * k / 242.0, 1e-9);
        EXPECT_EQ(fp.beam_id, static_cast<int>(i % 2));
    }
}

TEST(Orbit, SinusoidTruthIsClosedForm) {
    const auto s = small_scene();
    const PointIndex idx(generate_scene_points(s));
    OrbitSpec o;
    o.beam_x = {60};
    o.y_start = 60;
    o.shots_per_beam = 15;
    JitterSpec j;
    j.amplitude = 6;
    j.frequency = 2;
    const auto out = generate_orbit(idx, s, o, j, SimParams{});
    for (std::size_t k = 0; k < out.truth.size(); ++k) {
        const double t = k / 242.0;
        EXPECT_NEAR(out.truth[k].dx, -6 * std::sin(2 * M_PI * 2 * t), 1e-12);
        EXPECT_NEAR(out.truth[k].dy, 0.0, 1e-12);
    }
    EXPECT_THROW(JitterSpec{.frequency = -1}.validate(), Error);
}

TEST(Orbit, ReportedShotsPassQualityAndMatchTruePosition) {
    const auto s = small_scene();
    const PointIndex idx(generate_scene_points(s));
    OrbitSpec o;
    o.beam_x = {60};
    o.y_start = 100;
    o.shots_per_beam = 5;
    JitterSpec j;
    j.noise_sigma = 1.5;
    const auto out = generate_orbit(idx, s, o, j, SimParams{});
    for (std::size_t k = 0; k < out.footprints.size(); ++k) {
        const auto& fp = out.footprints[k];
        const auto truth = simulate_waveform(idx, fp.x + out.truth[k].dx, fp.y + out.truth[k].dy, SimParams{});
        EXPECT_EQ(fp.waveform.amplitudes.size(), truth.waveform.amplitudes.size());
        EXPECT_EQ(fp.rh, truth.rh);
        EXPECT_EQ(fp.degrade_flag, 0);
        EXPECT_EQ(fp.quality_flag, 1);
        EXPECT_LT(*fp.solar_elevation, 0.0);
    }
    // Same seed, same noise.
    EXPECT_EQ(generate_orbit(idx, s, o, j, SimParams{}).truth[3].dx, out.truth[3].dx);
    o.beam_x = {5000};
    EXPECT_THROW(generate_orbit(idx, s, o, j, SimParams{}), Error);
}

TEST(Truth, CsvRoundTrip) {
    TempDir d;
    std::vector<TruthRecord> t{{1, -7, 4}, {2, 0.1, -1e-17}};
    write_truth_csv(d.path() / "truth_offsets.csv", t);
    const auto back = read_truth_csv(d.path() / "truth_offsets.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].shot_number, 2);
    EXPECT_EQ(back[1].dx, 0.1);
    EXPECT_EQ(back[1].dy, -1e-17);
    EXPECT_EQ(slurp(d.path() / "truth_offsets.csv").substr(0, 18), "shot_number,dx,dy\n");
}
