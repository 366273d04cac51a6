#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "geocorrect/error.hpp"
#include "geocorrect/scoring.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace geocorrect;

namespace {

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

std::vector<double> normalized(gen::Rng& r, std::size_t n) { return oracle::smooth(gen::amplitudes(r, n)); }

SimulatedMetrics candidate(std::vector<double> amps, double top = 20.0, double ground = 0.0) {
    SimulatedMetrics m;
    m.waveform = Waveform{top, 0.5, std::move(amps)};
    m.ground_elevation = ground;
    m.rh.percentiles = standard_percentiles();
    m.rh.heights.assign(m.rh.percentiles.size(), 0.0);
    return m;
}

std::vector<double> bump(std::size_t n, double centre, double width = 2.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(-0.5 * std::pow((i - centre) / width, 2));
    return v;
}

}  // namespace

TEST(Normalize, Examples) {
    const auto p = normalize_to_distribution(std::vector<double>{1, 1, 2});
    EXPECT_NEAR(p[0], 0.25, 1e-9);
    EXPECT_NEAR(p[1], 0.25, 1e-9);
    EXPECT_NEAR(p[2], 0.5, 1e-9);
    const auto q = normalize_to_distribution(std::vector<double>{-1, 0, 3});
    EXPECT_NEAR(q[0], 1e-12 / 3, 1e-15);
    EXPECT_GT(q[0], 0.0);
    EXPECT_NEAR(q[2], 1.0, 1e-9);
    try {
        normalize_to_distribution(std::vector<double>{0, 0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_waveform);
    }
}

TEST(Normalize, SumsToOneAndMatchesOracle) {
    gen::Rng r(4);
    for (int i = 0; i < 200; ++i) {
        const auto a = gen::amplitudes(r, static_cast<std::size_t>(r.integer(1, 300)));
        const auto p = normalize_to_distribution(a);
        const auto want = oracle::smooth(a);
        double s = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            EXPECT_GT(p[k], 0.0);
            EXPECT_NEAR(p[k], want[k], 1e-15);
            s += p[k];
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Pearson, Examples) {
    const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 5, 4};
    EXPECT_DOUBLE_EQ(pearson(a, a), 1.0);
    EXPECT_DOUBLE_EQ(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
    // Worked by hand: Sab = 3.5, Saa = 5, Sbb = 4.75.
    EXPECT_NEAR(pearson(a, b), 3.5 / std::sqrt(5.0 * 4.75), 1e-12);
    EXPECT_NEAR(pearson(a, b), oracle::pearson(a, b), 1e-12);
    try {
        pearson(a, std::vector<double>{2, 2, 2, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::constant_input);
    }
}

TEST(Spearman, Examples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_DOUBLE_EQ(spearman(a, std::vector<double>{9, 4, 1}), -1.0);
    std::vector<double> cubed;
    for (double x : std::vector<double>{0.3, -2, 5, 1, 7}) cubed.push_back(x * x * x + 1);
    EXPECT_NEAR(spearman(std::vector<double>{0.3, -2, 5, 1, 7}, cubed), 1.0, 1e-12);
    const std::vector<double> t{1, 2, 2, 3}, u{1, 3, 2, 4};
    EXPECT_EQ(fractional_ranks(t), (std::vector<double>{1, 2.5, 2.5, 4}));
    EXPECT_NEAR(spearman(t, u), oracle::pearson({1, 2.5, 2.5, 4}, {1, 3, 2, 4}), 1e-12);
}

TEST(Correlation, MatchOraclesAndAffineInvariance) {
    gen::Rng r(21);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = static_cast<std::size_t>(r.integer(2, 120));
        auto a = gen::vector(r, n), b = gen::vector(r, n);
        if (r.coin(0.3))
            for (auto& x : b) x = std::round(x);  // ties
        EXPECT_LT(rel(pearson(a, b), oracle::pearson(a, b)), 1e-9);
        EXPECT_LT(rel(spearman(a, b), oracle::spearman(a, b)), 1e-9);
        const double s = r.uniform(0.1, 50), o = r.uniform(-100, 100);
        std::vector<double> t(a);
        for (auto& x : t) x = s * x + o;
        EXPECT_NEAR(pearson(t, b), pearson(a, b), 1e-9);
        EXPECT_NEAR(spearman(t, b), spearman(a, b), 1e-9);
    }
}

TEST(Crssda, ExamplesAndOracle) {
    const std::vector<double> a{1, 0}, b{0, 1};
    EXPECT_EQ(crssda(a, a), 0.0);
    EXPECT_DOUBLE_EQ(crssda(a, b), std::sqrt(2.0));
    gen::Rng r(8);
    for (int i = 0; i < 200; ++i) {
        const auto x = gen::vector(r, 100), y = gen::vector(r, 100);
        EXPECT_LT(rel(crssda(x, y), oracle::euclid(x, y)), 1e-12);
    }
}

TEST(Kl, Examples) {
    const std::vector<double> h{0.5, 0.5}, q{0.25, 0.75};
    EXPECT_EQ(kl_divergence(h, h), 0.0);
    EXPECT_NEAR(kl_divergence(h, q), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(kl_divergence(h, q), 0.14384, 1e-5);
    const auto sharp = normalize_to_distribution(std::vector<double>{1, 0});
    const auto flipped = normalize_to_distribution(std::vector<double>{0, 1});
    const double k = kl_divergence(sharp, flipped);
    EXPECT_TRUE(std::isfinite(k));
    EXPECT_GT(k, 20.0);
    try {
        kl_divergence(std::vector<double>{0.5, 0.6}, h);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::not_a_distribution);
    }
}

TEST(Kl, GibbsInequalityOnRandomPairs) {
    gen::Rng r(1000);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = static_cast<std::size_t>(r.integer(2, 80));
        const auto p = normalized(r, n), q = normalized(r, n);
        const double k = kl_divergence(p, q);
        EXPECT_GE(k, 0.0);
        EXPECT_LT(std::abs(k - oracle::kl(p, q)), 1e-9 * std::max(1.0, k));
    }
    for (int i = 0; i < 100; ++i) {
        const auto p = normalized(r, static_cast<std::size_t>(r.integer(2, 80)));
        EXPECT_EQ(kl_divergence(p, p), 0.0);
    }
}

TEST(Aged, Examples) {
    EXPECT_DOUBLE_EQ(aged(100.0, 98.5), 1.5);
    EXPECT_EQ(aged(3.3, 3.3), 0.0);
    EXPECT_DOUBLE_EQ(aged(-3.2, 4.8), 8.0);
}

TEST(RhDistance, ExamplesAndOracle) {
    gen::Rng r(16);
    const auto a = gen::rh_profile(r);
    EXPECT_EQ(rh_distance(a, a), 0.0);
    auto b = a;
    for (auto& h : b.heights) h += 1.0;
    // RH0 is not part of the sum, so shifting it too changes nothing.
    EXPECT_DOUBLE_EQ(rh_distance(a, b), 4.0);
    for (int i = 0; i < 200; ++i) {
        const auto x = gen::rh_profile(r), y = gen::rh_profile(r);
        EXPECT_LT(rel(rh_distance(x, y), oracle::rh_distance(x, y)), 1e-12);
    }
}

TEST(Distances, TriangleInequality) {
    gen::Rng r(3);
    for (int i = 0; i < 300; ++i) {
        const auto x = gen::vector(r, 40), y = gen::vector(r, 40), z = gen::vector(r, 40);
        EXPECT_LE(crssda(x, z), crssda(x, y) + crssda(y, z) + 1e-12);
        const auto p = gen::rh_profile(r), q = gen::rh_profile(r), s = gen::rh_profile(r);
        EXPECT_LE(rh_distance(p, s), rh_distance(p, q) + rh_distance(q, s) + 1e-12);
    }
}

TEST(MetricSet, ParseAndValidate) {
    const auto m = MetricSet::parse("wave_spearman wave_distance kl");
    EXPECT_EQ(m.metrics(), (std::vector<Metric>{Metric::wave_spearman, Metric::wave_distance, Metric::kl}));
    EXPECT_EQ(m.to_string(), "wave_spearman wave_distance kl");
    EXPECT_THROW(MetricSet::parse(""), Error);
    EXPECT_THROW(MetricSet::parse("kl kl"), Error);
    EXPECT_THROW(MetricSet::parse("kl cosine"), Error);
    for (auto name : {"wave_pearson", "wave_spearman", "kl", "wave_distance", "terrain", "rh_distance"})
        EXPECT_EQ(to_string(parse_metric(name)), name);
}

TEST(MapToScores, DirectionAndDegenerateCases) {
    const std::vector<std::optional<double>> raw{3.0, 1.0, std::nullopt, 2.0};
    EXPECT_EQ(map_to_scores(raw, Metric::kl), (std::vector<double>{0.0, 1.0, 0.0, 0.5}));
    EXPECT_EQ(map_to_scores(raw, Metric::wave_pearson), (std::vector<double>{1.0, 0.0, 0.0, 0.5}));
    const std::vector<std::optional<double>> same{0.4, 0.4, std::nullopt};
    EXPECT_EQ(map_to_scores(same, Metric::terrain), (std::vector<double>{1.0, 1.0, 0.0}));
}

TEST(MapToScores, ArgminBecomesArgmax) {
    gen::Rng r(12);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::optional<double>> raw(static_cast<std::size_t>(r.integer(1, 50)));
        for (auto& v : raw)
            if (!r.coin(0.2)) v = r.coin(0.2) ? std::round(r.uniform(0, 5)) : r.uniform(0, 5);
        const auto s = map_to_scores(raw, Metric::rh_distance);
        std::optional<std::size_t> best;
        for (std::size_t k = 0; k < raw.size(); ++k)
            if (raw[k] && (!best || *raw[k] < *raw[*best])) best = k;
        for (double v : s) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        if (best) EXPECT_EQ(s[*best], *std::max_element(s.begin(), s.end()));
    }
}

TEST(ScoreCandidates, IdenticalCentreCandidateWinsUnderKl) {
    Footprint fp;
    fp.waveform = Waveform{20.0, 0.5, bump(40, 18)};
    CandidateSet c;
    for (int i = 0; i < 9; ++i) c.push_back(candidate(bump(40, 18 + 0.7 * (i - 4))));
    const auto s = score_candidates(fp, c, MetricSet({Metric::kl}));
    ASSERT_TRUE(s.valid);
    EXPECT_EQ(s.scores[4], 1.0);
    for (int i = 0; i < 9; ++i)
        if (i != 4) EXPECT_LT(s.scores[static_cast<std::size_t>(i)], 1.0);
    EXPECT_EQ(std::max_element(s.scores.begin(), s.scores.end()) - s.scores.begin(), 4);
}

TEST(ScoreCandidates, MeanOfMetricScoresAndOrderIndependence) {
    Footprint fp;
    fp.elev_lowestmode = 10.0;
    fp.rh.percentiles = standard_percentiles();
    fp.rh.heights.assign(fp.rh.percentiles.size(), 0.0);
    fp.waveform = Waveform{20.0, 0.5, bump(40, 20)};
    CandidateSet c{candidate(bump(40, 20), 20, 10.0), candidate(bump(40, 20), 20, 11.0),
                   candidate(bump(40, 21), 20, 12.0), std::nullopt};
    // terrain scores (1, 0.5, 0); rh_distance all raw-identical so all 1
    const auto s = score_candidates(fp, c, MetricSet({Metric::terrain, Metric::rh_distance}));
    ASSERT_TRUE(s.valid);
    EXPECT_EQ(s.scores, (std::vector<double>{1.0, 0.75, 0.5, 0.0}));
    const auto x = score_candidates(fp, c, MetricSet({Metric::kl, Metric::terrain, Metric::wave_pearson}));
    const auto y = score_candidates(fp, c, MetricSet({Metric::wave_pearson, Metric::kl, Metric::terrain}));
    EXPECT_EQ(x.scores, y.scores);
    EXPECT_EQ(x, score_candidates(fp, c, MetricSet({Metric::kl, Metric::terrain, Metric::wave_pearson})));
}

TEST(ScoreCandidates, FailuresAndUnscorable) {
    Footprint fp;
    fp.waveform = Waveform{20.0, 0.5, bump(40, 20)};
    CandidateSet none(5);
    const auto s = score_candidates(fp, none, MetricSet({Metric::kl}));
    EXPECT_FALSE(s.valid);
    EXPECT_EQ(s.reason, "empty footprint");
    // Candidates that lie entirely above the reported waveform cannot be compared.
    CandidateSet far{candidate(bump(40, 20), 500.0)};
    const auto u = score_candidates(fp, far, MetricSet({Metric::wave_pearson}));
    EXPECT_FALSE(u.valid);
    EXPECT_EQ(u.reason, "unscorable");
}

TEST(Rh95Filter, ThresholdIsStrict) {
    auto with_rh95 = [](double h) {
        SimulatedMetrics m;
        m.rh.percentiles = {95};
        m.rh.heights = {h};
        return std::optional<SimulatedMetrics>(m);
    };
    Footprint fp;
    fp.rh.percentiles = {95};
    fp.rh.heights = {12.0};
    CandidateSet c{with_rh95(10.0), with_rh95(12.0), std::nullopt};
    EXPECT_EQ(rh95_change_filter(fp, c), ChangeDecision::keep);
    fp.rh.heights = {22.0};
    CandidateSet cut{with_rh95(5.0), with_rh95(5.0)};
    EXPECT_EQ(rh95_change_filter(fp, cut), ChangeDecision::discard);
    EXPECT_EQ(rh95_change_filter(fp, cut, 17.0), ChangeDecision::keep);
    fp.rh.heights = {15.0};
    EXPECT_EQ(rh95_change_filter(fp, cut, 10.0), ChangeDecision::keep);
    EXPECT_EQ(rh95_change_filter(fp, cut, 9.999), ChangeDecision::discard);
}
