#include "geocorrect/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "geocorrect/error.hpp"
#include "geocorrect/simulator.hpp"

namespace geocorrect {

namespace {

constexpr Metric kAllMetrics[] = {Metric::wave_pearson, Metric::wave_spearman, Metric::kl,
                                  Metric::wave_distance, Metric::terrain,      Metric::rh_distance};

bool larger_is_better(Metric m) { return m == Metric::wave_pearson || m == Metric::wave_spearman; }

void require_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::config, "sequence length mismatch");
}

}  // namespace

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::wave_pearson: return "wave_pearson";
        case Metric::wave_spearman: return "wave_spearman";
        case Metric::kl: return "kl";
        case Metric::wave_distance: return "wave_distance";
        case Metric::terrain: return "terrain";
        case Metric::rh_distance: return "rh_distance";
    }
    return "";
}

Metric parse_metric(std::string_view name) {
    for (Metric m : kAllMetrics) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorKind::config, "unknown criterion '" + std::string(name) + "'");
}

MetricSet::MetricSet(std::vector<Metric> metrics) : metrics_(std::move(metrics)) {
    if (metrics_.empty()) throw Error(ErrorKind::config, "criteria must name at least one metric");
    for (std::size_t i = 0; i < metrics_.size(); ++i) {
        for (std::size_t j = i + 1; j < metrics_.size(); ++j) {
            if (metrics_[i] == metrics_[j]) {
                throw Error(ErrorKind::config,
                            "duplicate criterion '" + std::string(geocorrect::to_string(metrics_[i])) + "'");
            }
        }
    }
}

MetricSet MetricSet::parse(std::string_view names) {
    std::vector<Metric> out;
    std::size_t pos = 0;
    while (pos < names.size()) {
        while (pos < names.size() && (names[pos] == ' ' || names[pos] == ',')) ++pos;
        std::size_t end = pos;
        while (end < names.size() && names[end] != ' ' && names[end] != ',') ++end;
        if (end > pos) out.push_back(parse_metric(names.substr(pos, end - pos)));
        pos = end;
    }
    return MetricSet(std::move(out));
}

bool MetricSet::contains(Metric m) const {
    return std::find(metrics_.begin(), metrics_.end(), m) != metrics_.end();
}

std::string MetricSet::to_string() const {
    std::string s;
    for (Metric m : metrics_) {
        if (!s.empty()) s += ' ';
        s += geocorrect::to_string(m);
    }
    return s;
}

std::vector<double> normalize_to_distribution(std::span<const double> amplitudes) {
    bool any_positive = false;
    for (double a : amplitudes) any_positive = any_positive || a > 0.0;
    if (!any_positive) throw Error(ErrorKind::degenerate_waveform, "degenerate waveform");
    std::vector<double> p(amplitudes.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::max(amplitudes[i], 0.0) + kDistributionEpsilon;
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::vector<double> normalize_to_distribution(const Waveform& w) {
    return normalize_to_distribution(std::span<const double>(w.amplitudes));
}

double pearson(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b);
    if (a.size() < 2) throw Error(ErrorKind::config, "correlation needs at least two samples");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorKind::constant_input, "constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b);
    const auto ra = fractional_ranks(a);
    const auto rb = fractional_ranks(b);
    return pearson(ra, rb);
}

double crssda(std::span<const double> r, std::span<const double> s) {
    require_same_length(r, s);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = r[i] - s[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double kl_divergence(std::span<const double> r, std::span<const double> s) {
    require_same_length(r, s);
    auto check = [](std::span<const double> p) {
        double sum = 0.0;
        for (double v : p) {
            if (!(v > 0.0)) throw Error(ErrorKind::not_a_distribution, "not a distribution");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorKind::not_a_distribution, "not a distribution");
    };
    check(r);
    check(s);
    double kl = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) kl += r[i] * std::log(r[i] / s[i]);
    return std::max(kl, 0.0);
}

double aged(double zg_reported, double zg_simulated) { return std::abs(zg_reported - zg_simulated); }

double rh_distance(const RHProfile& reported, const RHProfile& simulated) {
    double sum = 0.0;
    for (int p = 25; p <= 100; p += 5) {
        const double d = reported.at(p) - simulated.at(p);
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::vector<std::optional<double>> raw_metric_values(const Footprint& fp, const CandidateSet& candidates,
                                                     Metric metric) {
    std::vector<std::optional<double>> raw(candidates.size());
    std::optional<std::vector<double>> reported_dist;
    if (metric == Metric::kl || metric == Metric::wave_distance) {
        try {
            reported_dist = normalize_to_distribution(fp.waveform);
        } catch (const Error&) {
            return raw;  // nothing to compare against
        }
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i]) continue;
        const SimulatedMetrics& c = *candidates[i];
        try {
            switch (metric) {
                case Metric::terrain:
                    raw[i] = aged(fp.elev_lowestmode, c.ground_elevation);
                    break;
                case Metric::rh_distance:
                    raw[i] = rh_distance(fp.rh, c.rh);
                    break;
                case Metric::wave_pearson:
                case Metric::wave_spearman: {
                    const auto [r, s] = resample_to_common_grid(fp.waveform, c.waveform);
                    raw[i] = metric == Metric::wave_pearson ? pearson(r, s) : spearman(r, s);
                    break;
                }
                case Metric::kl:
                case Metric::wave_distance: {
                    const auto resampled = resample_to_common_grid(fp.waveform, c.waveform).second;
                    const auto s = normalize_to_distribution(resampled);
                    raw[i] = metric == Metric::kl ? kl_divergence(*reported_dist, s) : crssda(*reported_dist, s);
                    break;
                }
            }
        } catch (const Error&) {
            // disjoint, flat, or unnormalisable candidate: leave unscored
        }
    }
    return raw;
}

std::vector<double> map_to_scores(std::span<const std::optional<double>> raw, Metric metric) {
    const bool larger = larger_is_better(metric);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : raw) {
        if (!v) continue;
        const double x = larger ? (*v + 1.0) / 2.0 : *v;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    std::vector<double> scores(raw.size(), 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!raw[i]) continue;
        if (hi == lo) {
            scores[i] = 1.0;
            continue;
        }
        const double x = larger ? (*raw[i] + 1.0) / 2.0 : *raw[i];
        const double t = (x - lo) / (hi - lo);
        scores[i] = std::clamp(larger ? t : 1.0 - t, 0.0, 1.0);
    }
    return scores;
}

ScoredFootprint score_candidates(const Footprint& fp, const CandidateSet& candidates, const MetricSet& metrics) {
    ScoredFootprint out;
    out.shot_number = fp.shot_number;
    out.beam_id = fp.beam_id;
    out.delta_time = fp.delta_time;
    const bool any = std::any_of(candidates.begin(), candidates.end(), [](const auto& c) { return c.has_value(); });
    if (!any) {
        out.reason = "empty footprint";
        return out;
    }
    // Sum in canonical metric order so the result does not depend on how the
    // user listed the criteria.
    std::vector<double> total(candidates.size(), 0.0);
    bool any_scored = false;
    for (Metric m : kAllMetrics) {
        if (!metrics.contains(m)) continue;
        const auto raw = raw_metric_values(fp, candidates, m);
        any_scored = any_scored || std::any_of(raw.begin(), raw.end(), [](const auto& v) { return v.has_value(); });
        const auto s = map_to_scores(raw, m);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += s[i];
    }
    if (!any_scored) {
        out.reason = "unscorable";
        return out;
    }
    const double count = static_cast<double>(metrics.metrics().size());
    out.scores.resize(total.size());
    for (std::size_t i = 0; i < total.size(); ++i) out.scores[i] = total[i] / count;
    out.valid = true;
    return out;
}

ChangeDecision rh95_change_filter(const Footprint& fp, const CandidateSet& candidates, double threshold_m) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : candidates) {
        if (!c) continue;
        if (auto h = c->rh.find(95)) {
            sum += *h;
            ++n;
        }
    }
    const auto reported = fp.rh.find(95);
    if (n == 0 || !reported) return ChangeDecision::discard;
    const double diff = std::abs(*reported - sum / static_cast<double>(n));
    return diff > threshold_m ? ChangeDecision::discard : ChangeDecision::keep;
}

}  // namespace geocorrect
