#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "geocorrect/correction.hpp"
#include "geocorrect/error.hpp"
#include "geocorrect/synthgen.hpp"
#include "support/generators.hpp"

using namespace geocorrect;

namespace {

ScoredFootprint peaked(const OffsetGrid& g, std::int64_t shot, int beam, double t, Offset peak, double width = 2.0) {
    ScoredFootprint s;
    s.shot_number = shot;
    s.beam_id = beam;
    s.delta_time = t;
    s.valid = true;
    for (const auto& o : g.offsets()) {
        const double d2 = (o.dx - peak.dx) * (o.dx - peak.dx) + (o.dy - peak.dy) * (o.dy - peak.dy);
        s.scores.push_back(std::exp(-d2 / (2 * width * width)));
    }
    return s;
}

ScoredFootprint invalid(std::int64_t shot, int beam, double t) {
    ScoredFootprint s;
    s.shot_number = shot;
    s.beam_id = beam;
    s.delta_time = t;
    s.reason = "rh95 change";
    return s;
}

// A 160 x 160 m patch with sine terrain and a dense random canopy.
SceneSpec patch(bool with_trees = true) {
    SceneSpec s;
    s.width = 160;
    s.length = 160;
    s.terrain.kind = Terrain::Kind::sine;
    s.terrain.z0 = 50;
    s.terrain.amplitude = 4;
    s.terrain.wavelength = 90;
    s.ground_density = 2;
    s.seed = 5;
    if (with_trees) s.trees = random_trees(s, 60, 8, 22, 2, 5, 3, 11, 10);
    return s;
}

Footprint reported_at(const PointIndex& idx, double true_x, double true_y, double rep_x, double rep_y) {
    const SimParams p;
    const auto sim = simulate_waveform(idx, true_x, true_y, p);
    Footprint fp;
    fp.shot_number = 1;
    fp.x = rep_x;
    fp.y = rep_y;
    fp.waveform = sim.waveform;
    fp.rh = sim.rh;
    fp.elev_lowestmode = sim.ground_elevation;
    return fp;
}

}  // namespace

TEST(Grid, Examples) {
    const auto g = generate_offset_grid();
    EXPECT_EQ(g.size(), 961u);
    EXPECT_EQ(g[0], (Offset{-15, -15}));
    EXPECT_EQ(g[960], (Offset{15, 15}));
    EXPECT_EQ(generate_offset_grid(4, 2).size(), 9u);
    const auto odd = generate_offset_grid(5, 2);
    ASSERT_EQ(odd.size(), 9u);
    EXPECT_EQ(odd[0], (Offset{-2, -2}));
    EXPECT_THROW(generate_offset_grid(-1, 1), Error);
    EXPECT_THROW(generate_offset_grid(30, 0), Error);
}

TEST(AggregateOrbit, CommonPeakIsChosen) {
    const auto g = generate_offset_grid();
    std::vector<ScoredFootprint> s;
    for (int i = 0; i < 20; ++i) s.push_back(peaked(g, i, 0, i / 242.0, {7, -4}));
    const auto a = aggregate_orbit(s, g);
    EXPECT_EQ(a.offset, (Offset{7, -4}));
    EXPECT_EQ(a.index, canonical_offset_index(7, -4, g));
    EXPECT_DOUBLE_EQ(a.mean_score, 1.0);
}

TEST(AggregateOrbit, SplitPeaksMeetInTheMiddle) {
    const auto g = generate_offset_grid();
    std::vector<ScoredFootprint> s;
    for (int i = 0; i < 10; ++i) s.push_back(peaked(g, i, 0, i, i % 2 ? Offset{2, 0} : Offset{4, 0}));
    EXPECT_EQ(aggregate_orbit(s, g).offset, (Offset{3, 0}));
}

TEST(AggregateOrbit, TieBreaks) {
    const auto g = generate_offset_grid(4, 1);
    ScoredFootprint flat;
    flat.valid = true;
    flat.scores.assign(g.size(), 0.5);
    EXPECT_EQ(aggregate_orbit(std::vector{flat}, g).offset, (Offset{0, 0}));
    // Four equal-magnitude winners: the earliest in (dy, dx) order is (0, -1).
    ScoredFootprint ring = flat;
    for (Offset o : {Offset{1, 0}, Offset{-1, 0}, Offset{0, 1}, Offset{0, -1}})
        ring.scores[canonical_offset_index(o.dx, o.dy, g)] = 0.9;
    EXPECT_EQ(aggregate_orbit(std::vector{ring}, g).offset, (Offset{0, -1}));
    // Magnitude beats order: (2,-2) comes first but is farther than (1,1).
    ScoredFootprint far = flat;
    far.scores[canonical_offset_index(2, -2, g)] = 0.9;
    far.scores[canonical_offset_index(1, 1, g)] = 0.9;
    EXPECT_EQ(aggregate_orbit(std::vector{far}, g).offset, (Offset{1, 1}));
}

TEST(AggregateOrbit, InvalidRecordsCarryNoWeight) {
    const auto g = generate_offset_grid(10, 1);
    std::vector<ScoredFootprint> s{peaked(g, 1, 0, 0, {2, 3})};
    auto junk = peaked(g, 2, 0, 0, {-5, -5});
    junk.valid = false;
    s.push_back(junk);
    const auto a = aggregate_orbit(s, g);
    EXPECT_EQ(a.offset, (Offset{2, 3}));
    EXPECT_DOUBLE_EQ(a.mean_score, 1.0);
    std::vector<ScoredFootprint> none{invalid(1, 0, 0)};
    try {
        aggregate_orbit(none, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::nothing_to_correct);
        EXPECT_STREQ(e.what(), "nothing to correct");
    }
}

TEST(AggregateOrbit, PermutationInvariant) {
    gen::Rng r(99);
    const auto g = generate_offset_grid(8, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ScoredFootprint> s;
        const int n = r.integer(1, 30);
        for (int i = 0; i < n; ++i) {
            ScoredFootprint f;
            f.shot_number = i;
            f.valid = !r.coin(0.2);
            for (std::size_t k = 0; k < g.size(); ++k) f.scores.push_back(r.coin(0.1) ? 1.0 : r.uniform());
            s.push_back(f);
        }
        if (std::none_of(s.begin(), s.end(), [](const auto& f) { return f.valid; })) continue;
        const auto a = aggregate_orbit(s, g);
        std::shuffle(s.begin(), s.end(), r.engine());
        const auto b = aggregate_orbit(s, g);
        EXPECT_EQ(a.index, b.index);
        EXPECT_EQ(a.mean_score, b.mean_score);
        EXPECT_LE(std::abs(a.offset.dx), g.span() / 2);
        EXPECT_LE(std::abs(a.offset.dy), g.span() / 2);
    }
}

TEST(AggregateBeam, PerBeamPeaks) {
    const auto g = generate_offset_grid();
    std::vector<ScoredFootprint> s;
    for (int i = 0; i < 10; ++i) {
        s.push_back(peaked(g, 2 * i, 1, i, {3, 0}));
        s.push_back(peaked(g, 2 * i + 1, 2, i, {-2, 5}));
        s.push_back(invalid(100 + i, 3, i));
    }
    const auto m = aggregate_beam(s, g);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m.at(1)->offset, (Offset{3, 0}));
    EXPECT_EQ(m.at(2)->offset, (Offset{-2, 5}));
    EXPECT_FALSE(m.at(3).has_value());

    std::vector<ScoredFootprint> one(s.begin(), s.end());
    std::erase_if(one, [](const auto& f) { return f.beam_id != 1; });
    EXPECT_EQ(aggregate_beam(one, g).at(1)->index, aggregate_orbit(one, g).index);
}

TEST(Cluster, SizesAt242Hz) {
    std::vector<ScoredFootprint> s;
    const auto g = generate_offset_grid(2, 1);
    for (int i = 0; i < 300; ++i) s.push_back(peaked(g, i, 0, 0.1 + i / 242.0, {0, 0}));
    auto interior = [&](double window) {
        std::set<std::size_t> sizes;
        const auto c = cluster_footprints(s, ClusterWindow{window});
        for (std::size_t i = 60; i < 240; ++i) sizes.insert(c[i].size());
        return sizes;
    };
    for (auto n : interior(0.2)) EXPECT_TRUE(n == 48 || n == 49) << n;
    for (auto n : interior(0.04)) EXPECT_TRUE(n >= 9 && n <= 11) << n;
    EXPECT_EQ(interior(0.0), (std::set<std::size_t>{1}));
    EXPECT_THROW(cluster_footprints(s, ClusterWindow{-1.0}), Error);
}

TEST(Cluster, SymmetricSameBeamValidOnly) {
    gen::Rng r(5);
    const auto g = generate_offset_grid(2, 1);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<ScoredFootprint> s;
        const int n = r.integer(1, 80);
        for (int i = 0; i < n; ++i) {
            const int beam = r.integer(0, 3);
            const double t = r.integer(0, 200) / 242.0;
            s.push_back(r.coin(0.15) ? invalid(i, beam, t) : peaked(g, i, beam, t, {0, 0}));
        }
        const double w = r.uniform(0, 0.2);
        const auto c = cluster_footprints(s, ClusterWindow{w});
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].valid) {
                EXPECT_TRUE(c[i].empty());
                continue;
            }
            EXPECT_TRUE(std::binary_search(c[i].begin(), c[i].end(), i));
            for (std::size_t j : c[i]) {
                EXPECT_TRUE(s[j].valid);
                EXPECT_EQ(s[j].beam_id, s[i].beam_id);
                EXPECT_LE(std::abs(s[j].delta_time - s[i].delta_time), w / 2 + 1e-9);
                EXPECT_TRUE(std::binary_search(c[j].begin(), c[j].end(), i));
            }
            // Nothing eligible is left out.
            for (std::size_t j = 0; j < s.size(); ++j) {
                const bool eligible = s[j].valid && s[j].beam_id == s[i].beam_id &&
                                      std::abs(s[j].delta_time - s[i].delta_time) <= w / 2;
                if (eligible) EXPECT_TRUE(std::binary_search(c[i].begin(), c[i].end(), j));
            }
        }
    }
}

TEST(AggregateFootprint, ConstantOffsetMatchesOrbitAndIsolatedShotKeepsItsOwn) {
    const auto g = generate_offset_grid();
    std::vector<ScoredFootprint> s;
    for (int i = 0; i < 40; ++i) s.push_back(peaked(g, i, i % 2, i / 242.0, {-6, 2}));
    s.push_back(peaked(g, 99, 0, 50.0, {4, 4}));
    s.push_back(invalid(100, 0, 50.001));
    const auto c = cluster_footprints(s, ClusterWindow{0.04});
    const auto m = aggregate_footprint(s, c, g);
    EXPECT_EQ(m.size(), 41u);
    EXPECT_FALSE(m.contains(100));
    for (int i = 0; i < 40; ++i) EXPECT_EQ(m.at(i).aggregate.offset, (Offset{-6, 2}));
    EXPECT_EQ(m.at(99).aggregate.offset, (Offset{4, 4}));
    EXPECT_EQ(m.at(99).cluster_size, 1);
    EXPECT_EQ(m.at(20).cluster_size, 5);  // beams alternate, so two same-beam neighbours each side
}

class SceneTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        index_ = new PointIndex(generate_scene_points(patch()));
        bare_ = new PointIndex(generate_scene_points(patch(false)));
    }
    static void TearDownTestSuite() {
        delete index_;
        delete bare_;
    }
    static PointIndex* index_;
    static PointIndex* bare_;
};
PointIndex* SceneTest::index_ = nullptr;
PointIndex* SceneTest::bare_ = nullptr;

TEST_F(SceneTest, ProcessFootprintFindsInjectedEastOffset) {
    const auto g = generate_offset_grid(16, 1);
    const Footprint fp = reported_at(*index_, 85, 80, 80, 80);
    const auto s = process_footprint(fp, *index_, g, SimParams{}, MetricSet({Metric::kl}));
    ASSERT_TRUE(s.valid) << s.reason;
    EXPECT_EQ(aggregate_orbit(std::vector{s}, g).offset, (Offset{5, 0}));
}

TEST_F(SceneTest, ClearCutIsFilteredAndOutsideIsEmpty) {
    const auto g = generate_offset_grid(8, 1);
    const Footprint fp = reported_at(*index_, 80, 80, 80, 80);
    ASSERT_GT(fp.rh.at(95), 12.0);
    const auto cut = process_footprint(fp, *bare_, g, SimParams{}, MetricSet({Metric::kl}), 10.0);
    EXPECT_FALSE(cut.valid);
    EXPECT_EQ(cut.reason, "rh95 change");
    const auto lenient = process_footprint(fp, *bare_, g, SimParams{}, MetricSet({Metric::kl}), 1000.0);
    EXPECT_TRUE(lenient.valid);
    Footprint away = fp;
    away.x = 5000;
    const auto out = process_footprint(away, *index_, g, SimParams{}, MetricSet({Metric::kl}));
    EXPECT_FALSE(out.valid);
    EXPECT_EQ(out.reason, "empty footprint");
}

TEST_F(SceneTest, ResimulationAtCentreMatchesCandidate) {
    const auto g = generate_offset_grid(4, 1);
    const SimParams p;
    const Footprint fp = reported_at(*index_, 85, 80, 80, 80);
    const auto cands = simulate_candidates(fp, *index_, g, p);
    const auto centre = resimulate_and_emit(fp, {0, 0}, *index_, p);
    ASSERT_TRUE(centre.simulated.has_value());
    EXPECT_EQ(*centre.simulated, *cands[g.center_index()]);
    EXPECT_EQ(centre.status, ResultStatus::corrected);

    const auto moved = resimulate_and_emit(fp, {5, 0}, *index_, p, CorrectionMode::beam);
    EXPECT_EQ(moved.corrected_x, 85.0);
    EXPECT_EQ(moved.corrected_y, 80.0);
    EXPECT_EQ(moved.mode, CorrectionMode::beam);
    EXPECT_NEAR(moved.simulated->rh.at(95), fp.rh.at(95), 1.0);

    Footprint away = fp;
    away.x = 5000;
    const auto gone = resimulate_and_emit(away, {0, 0}, *index_, p);
    EXPECT_EQ(gone.status, ResultStatus::discarded);
    EXPECT_EQ(gone.reason, "empty footprint");
    EXPECT_FALSE(gone.simulated.has_value());
}

TEST(ResultStatus, NamesRoundTrip) {
    for (auto s : {ResultStatus::corrected, ResultStatus::filtered, ResultStatus::uncorrected, ResultStatus::discarded,
                   ResultStatus::out_of_coverage, ResultStatus::quality_rejected})
        EXPECT_EQ(parse_result_status(to_string(s)), s);
    EXPECT_THROW(parse_result_status("maybe"), Error);
}
