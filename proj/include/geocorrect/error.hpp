#pragma once

#include <stdexcept>
#include <string>

namespace geocorrect {

enum class ErrorKind {
    config,
    offset_not_on_grid,
    unsupported_tile_format,
    corrupt_tile,
    empty_footprint,
    no_detectable_mode,
    empty_waveform,
    disjoint_waveforms,
    degenerate_waveform,
    constant_input,
    not_a_distribution,
    nothing_to_correct,
    zero_variance,
    undefined_rrmse,
    empty_input,
    parse,
    io,
};

// Every library failure is reported through this type. what() carries the
// user-facing message (e.g. "offset not on grid"), kind() the category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace geocorrect
