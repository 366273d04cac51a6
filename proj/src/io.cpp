#include "geocorrect/io.hpp"

#include <fstream>
#include <set>

#include "geocorrect/error.hpp"

namespace geocorrect {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

// Field access that reports the field name on failure.
template <typename T>
T get_field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw Error(ErrorKind::parse, std::string("missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::parse, std::string("field '") + name + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* name) {
    if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
    return get_field<T>(j, name);
}

template <typename T>
void put_optional(ojson& j, const char* name, const std::optional<T>& v) {
    if (v) j[name] = *v;
}

ojson waveform_to_json(const Waveform& w) {
    ojson j;
    j["top_elevation"] = w.top_elevation;
    j["bin_size"] = w.bin_size;
    j["amplitudes"] = w.amplitudes;
    return j;
}

Waveform waveform_from_json(const json& j) {
    Waveform w;
    w.top_elevation = get_field<double>(j, "top_elevation");
    w.bin_size = get_field<double>(j, "bin_size");
    w.amplitudes = get_field<std::vector<double>>(j, "amplitudes");
    return w;
}

ojson rh_to_json(const RHProfile& rh) {
    ojson j;
    j["percentiles"] = rh.percentiles;
    j["heights"] = rh.heights;
    return j;
}

RHProfile rh_from_json(const json& j) {
    RHProfile rh;
    rh.percentiles = get_field<std::vector<int>>(j, "percentiles");
    rh.heights = get_field<std::vector<double>>(j, "heights");
    if (rh.percentiles.size() != rh.heights.size()) {
        throw Error(ErrorKind::parse, "field 'rh': percentiles and heights differ in length");
    }
    return rh;
}

ojson sim_to_json(const SimulatedMetrics& s) {
    ojson j;
    j["ground_elevation"] = s.ground_elevation;
    j["offset"] = {{"dx", s.offset.dx}, {"dy", s.offset.dy}};
    j["rh"] = rh_to_json(s.rh);
    j["waveform"] = waveform_to_json(s.waveform);
    return j;
}

SimulatedMetrics sim_from_json(const json& j) {
    SimulatedMetrics s;
    s.ground_elevation = get_field<double>(j, "ground_elevation");
    const json off = get_field<json>(j, "offset");
    s.offset = {get_field<double>(off, "dx"), get_field<double>(off, "dy")};
    s.rh = rh_from_json(get_field<json>(j, "rh"));
    s.waveform = waveform_from_json(get_field<json>(j, "waveform"));
    return s;
}

template <typename Record, typename Parse>
std::vector<Record> read_jsonl(const std::filesystem::path& path, Parse parse) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::vector<Record> out;
    std::set<std::int64_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        try {
            Record r = parse(json::parse(line));
            if (!seen.insert(r.shot_number).second) {
                throw Error(ErrorKind::parse, "duplicate shot_number " + std::to_string(r.shot_number));
            }
            out.push_back(std::move(r));
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::parse, where + "malformed JSON (" + e.what() + ")");
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, where + e.what());
        }
    }
    return out;
}

template <typename Record, typename Emit>
void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records, Emit emit) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    for (const auto& r : records) out << emit(r).dump() << '\n';
    if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

}  // namespace

ojson footprint_to_json(const Footprint& fp) {
    ojson j;
    j["shot_number"] = fp.shot_number;
    j["beam_id"] = fp.beam_id;
    j["delta_time"] = fp.delta_time;
    j["x"] = fp.x;
    j["y"] = fp.y;
    j["elev_lowestmode"] = fp.elev_lowestmode;
    j["rh"] = rh_to_json(fp.rh);
    j["waveform"] = waveform_to_json(fp.waveform);
    put_optional(j, "sensitivity", fp.sensitivity);
    put_optional(j, "quality_flag", fp.quality_flag);
    put_optional(j, "degrade_flag", fp.degrade_flag);
    put_optional(j, "solar_elevation", fp.solar_elevation);
    put_optional(j, "num_detected_modes", fp.num_detected_modes);
    put_optional(j, "dem_elevation", fp.dem_elevation);
    return j;
}

Footprint footprint_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::parse, "record is not an object");
    Footprint fp;
    fp.shot_number = get_field<std::int64_t>(j, "shot_number");
    fp.beam_id = get_field<int>(j, "beam_id");
    fp.delta_time = get_field<double>(j, "delta_time");
    fp.x = get_field<double>(j, "x");
    fp.y = get_field<double>(j, "y");
    fp.elev_lowestmode = get_field<double>(j, "elev_lowestmode");
    fp.rh = rh_from_json(get_field<json>(j, "rh"));
    fp.waveform = waveform_from_json(get_field<json>(j, "waveform"));
    try {
        fp.waveform.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::parse, std::string("field 'waveform': ") + e.what());
    }
    fp.sensitivity = get_optional<double>(j, "sensitivity");
    fp.quality_flag = get_optional<int>(j, "quality_flag");
    fp.degrade_flag = get_optional<int>(j, "degrade_flag");
    fp.solar_elevation = get_optional<double>(j, "solar_elevation");
    fp.num_detected_modes = get_optional<int>(j, "num_detected_modes");
    fp.dem_elevation = get_optional<double>(j, "dem_elevation");
    return fp;
}

ojson result_to_json(const CorrectionResult& r) {
    ojson j;
    j["shot_number"] = r.shot_number;
    j["beam_id"] = r.beam_id;
    j["mode"] = std::string(to_string(r.mode));
    j["status"] = std::string(to_string(r.status));
    j["reason"] = r.reason;
    j["chosen_offset"] = {{"dx", r.chosen_offset.dx}, {"dy", r.chosen_offset.dy}};
    j["x"] = r.x;
    j["y"] = r.y;
    j["corrected_x"] = r.corrected_x;
    j["corrected_y"] = r.corrected_y;
    j["final_score"] = r.final_score;
    j["cluster_size"] = r.cluster_size;
    put_optional(j, "datum_shift", r.datum_shift);
    if (r.simulated) j["simulated"] = sim_to_json(*r.simulated);
    if (r.origin) j["origin"] = sim_to_json(*r.origin);
    return j;
}

CorrectionResult result_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::parse, "record is not an object");
    CorrectionResult r;
    r.shot_number = get_field<std::int64_t>(j, "shot_number");
    r.beam_id = get_field<int>(j, "beam_id");
    try {
        r.mode = parse_correction_mode(get_field<std::string>(j, "mode"));
    } catch (const Error& e) {
        throw Error(ErrorKind::parse, std::string("field 'mode': ") + e.what());
    }
    r.status = parse_result_status(get_field<std::string>(j, "status"));
    r.reason = get_field<std::string>(j, "reason");
    const json off = get_field<json>(j, "chosen_offset");
    r.chosen_offset = {get_field<double>(off, "dx"), get_field<double>(off, "dy")};
    r.x = get_field<double>(j, "x");
    r.y = get_field<double>(j, "y");
    r.corrected_x = get_field<double>(j, "corrected_x");
    r.corrected_y = get_field<double>(j, "corrected_y");
    r.final_score = get_field<double>(j, "final_score");
    r.cluster_size = get_field<int>(j, "cluster_size");
    r.datum_shift = get_optional<double>(j, "datum_shift");
    if (j.contains("simulated") && !j.at("simulated").is_null()) r.simulated = sim_from_json(j.at("simulated"));
    if (j.contains("origin") && !j.at("origin").is_null()) r.origin = sim_from_json(j.at("origin"));
    return r;
}

std::vector<Footprint> read_footprint_file(const std::filesystem::path& path) {
    return read_jsonl<Footprint>(path, [](const json& j) { return footprint_from_json(j); });
}

void write_footprint_file(const std::filesystem::path& path, const std::vector<Footprint>& footprints) {
    write_jsonl(path, footprints, [](const Footprint& fp) { return footprint_to_json(fp); });
}

std::vector<CorrectionResult> read_correction_output(const std::filesystem::path& path) {
    return read_jsonl<CorrectionResult>(path, [](const json& j) { return result_from_json(j); });
}

void write_correction_output(const std::filesystem::path& path, const std::vector<CorrectionResult>& results) {
    write_jsonl(path, results, [](const CorrectionResult& r) { return result_to_json(r); });
}

}  // namespace geocorrect
