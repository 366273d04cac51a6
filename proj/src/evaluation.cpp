#include "geocorrect/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "geocorrect/error.hpp"

namespace geocorrect {

namespace {

void require_same_length(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw Error(ErrorKind::config, "sequence length mismatch");
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

nlohmann::ordered_json stats_json(const Stats& s) {
    nlohmann::ordered_json j;
    j["n"] = s.n;
    j["r_squared"] = s.r_squared ? nlohmann::ordered_json(*s.r_squared) : nlohmann::ordered_json(nullptr);
    j["rmse_m"] = s.rmse_m ? nlohmann::ordered_json(*s.rmse_m) : nlohmann::ordered_json(nullptr);
    j["rrmse_pct"] = s.rrmse_pct ? nlohmann::ordered_json(*s.rrmse_pct) : nlohmann::ordered_json(nullptr);
    j["gaps"] = s.gaps;
    return j;
}

}  // namespace

double r_squared(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    if (y.size() < 2) throw Error(ErrorKind::config, "r_squared needs at least two samples");
    const double m = mean(y);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - m) * (y[i] - m);
    }
    if (!(ss_tot > 0.0)) throw Error(ErrorKind::zero_variance, "zero variance");
    return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    if (y.empty()) throw Error(ErrorKind::empty_input, "empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(ss / static_cast<double>(y.size()));
}

double rrmse(std::span<const double> y, std::span<const double> yhat) {
    const double e = rmse(y, yhat);
    const double m = mean(y);
    if (m == 0.0) throw Error(ErrorKind::undefined_rrmse, "undefined rRMSE");
    return e / m * 100.0;
}

double delta_rh(const RHProfile& rh) { return rh.at(95) - rh.at(50); }

Stats compute_stats(std::span<const double> y, std::span<const double> yhat) {
    Stats s;
    s.n = y.size();
    if (y.empty()) {
        s.gaps.push_back("no data");
        return s;
    }
    s.rmse_m = rmse(y, yhat);
    try {
        s.rrmse_pct = rrmse(y, yhat);
    } catch (const Error& e) {
        s.gaps.push_back(std::string("rrmse: ") + e.what());
    }
    if (y.size() < 2) {
        s.gaps.push_back("r_squared: fewer than two samples");
    } else {
        try {
            s.r_squared = r_squared(y, yhat);
        } catch (const Error& e) {
            s.gaps.push_back(std::string("r_squared: ") + e.what());
        }
    }
    return s;
}

ReportSet build_report(std::span<const CorrectionResult> results, std::span<const Footprint> originals) {
    std::unordered_map<std::int64_t, const Footprint*> by_shot;
    for (const auto& fp : originals) by_shot[fp.shot_number] = &fp;

    std::vector<const CorrectionResult*> used;
    ReportSet set;
    set.results = results.size();
    for (const auto& r : results) {
        if (r.status == ResultStatus::corrected && r.simulated && by_shot.count(r.shot_number)) {
            used.push_back(&r);
        }
    }
    std::sort(used.begin(), used.end(),
              [](const CorrectionResult* a, const CorrectionResult* b) { return a->shot_number < b->shot_number; });
    set.used = used.size();
    set.excluded = set.results - set.used;
    double mag = 0.0;
    for (const auto* r : used) mag += r->chosen_offset.magnitude();
    set.mean_offset_magnitude_m = used.empty() ? 0.0 : mag / static_cast<double>(used.size());

    struct Extractor {
        const char* name;
        double (*reported)(const Footprint&);
        double (*simulated)(const SimulatedMetrics&);
    };
    const Extractor extractors[] = {
        {"RH95", [](const Footprint& f) { return f.rh.at(95); }, [](const SimulatedMetrics& s) { return s.rh.at(95); }},
        {"dRH95_50", [](const Footprint& f) { return delta_rh(f.rh); },
         [](const SimulatedMetrics& s) { return delta_rh(s.rh); }},
        {"terrain", [](const Footprint& f) { return f.elev_lowestmode; },
         [](const SimulatedMetrics& s) { return s.ground_elevation; }},
    };

    for (const auto& ex : extractors) {
        AccuracyReport rep;
        rep.variable = ex.name;
        rep.mean_offset_magnitude_m = set.mean_offset_magnitude_m;
        std::vector<double> y, yhat;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> modes;
        std::size_t skipped = 0;
        for (const auto* r : used) {
            double a = 0.0, b = 0.0;
            try {
                a = ex.reported(*by_shot.at(r->shot_number));
                b = ex.simulated(*r->simulated);
            } catch (const Error&) {
                ++skipped;  // profile without the needed percentiles
                continue;
            }
            y.push_back(a);
            yhat.push_back(b);
            auto& m = modes[std::string(to_string(r->mode))];
            m.first.push_back(a);
            m.second.push_back(b);
            rep.scatter.push_back({r->shot_number, a, b, r->mode});
        }
        rep.stats = compute_stats(y, yhat);
        if (skipped) rep.stats.gaps.push_back(std::to_string(skipped) + " results lack the variable");
        for (const auto& [mode, data] : modes) rep.per_mode[mode] = compute_stats(data.first, data.second);
        set.reports.push_back(std::move(rep));
    }
    return set;
}

void write_report(const std::filesystem::path& dir, const ReportSet& report) {
    nlohmann::ordered_json j;
    j["results"] = report.results;
    j["used"] = report.used;
    j["excluded"] = report.excluded;
    j["mean_offset_magnitude_m"] = report.mean_offset_magnitude_m;
    j["variables"] = nlohmann::ordered_json::array();
    for (const auto& rep : report.reports) {
        nlohmann::ordered_json v;
        v["variable"] = rep.variable;
        v["stats"] = stats_json(rep.stats);
        v["mean_offset_magnitude_m"] = rep.mean_offset_magnitude_m;
        v["per_mode"] = nlohmann::ordered_json::object();
        for (const auto& [mode, s] : rep.per_mode) v["per_mode"][mode] = stats_json(s);
        v["scatter_file"] = "scatter_" + rep.variable + ".csv";
        j["variables"].push_back(std::move(v));

        std::ofstream csv(dir / ("scatter_" + rep.variable + ".csv"));
        if (!csv) throw Error(ErrorKind::io, "cannot write scatter file in " + dir.string());
        csv << "shot_number,reported,simulated,mode\n";
        for (const auto& row : rep.scatter) {
            csv << row.shot_number << ',' << format_double(row.reported) << ',' << format_double(row.simulated) << ','
                << to_string(row.mode) << '\n';
        }
    }
    std::ofstream out(dir / "accuracy_report.json");
    if (!out) throw Error(ErrorKind::io, "cannot write accuracy report in " + dir.string());
    out << j.dump(2) << '\n';
}

}  // namespace geocorrect
