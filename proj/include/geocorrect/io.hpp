#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geocorrect/core.hpp"
#include "geocorrect/correction.hpp"

namespace geocorrect {

// JSON Lines interchange: one object per line. Waveforms are written as
// {top_elevation, bin_size, amplitudes}, RH profiles as parallel
// {percentiles, heights} arrays. Absent optional fields are omitted.

nlohmann::ordered_json footprint_to_json(const Footprint& fp);
/// Throws Error(parse) naming the offending field.
Footprint footprint_from_json(const nlohmann::json& j);

nlohmann::ordered_json result_to_json(const CorrectionResult& r);
CorrectionResult result_from_json(const nlohmann::json& j);

/// Throws Error(parse) with "<file>:<line>: ..." on schema violations or
/// duplicate shot numbers, Error(io) when unreadable.
std::vector<Footprint> read_footprint_file(const std::filesystem::path& path);
void write_footprint_file(const std::filesystem::path& path, const std::vector<Footprint>& footprints);

std::vector<CorrectionResult> read_correction_output(const std::filesystem::path& path);
void write_correction_output(const std::filesystem::path& path, const std::vector<CorrectionResult>& results);

}  // namespace geocorrect
