#pragma once

#include <stdexcept>
#include <string>

namespace filagauge {

/// Stable error identities for everything the library can reject.
enum class Errc {
    FileUnreadable,
    UnsupportedFormat,
    EmptySequence,
    RoiOutOfBounds,
    NoFilament,
    AmbiguousBand,
    MaskTooSparse,
    ShiftOutOfRange,
    EmptyCenterline,
    TooFewSamples,
    DegenerateSamples,
    NonPositiveDistance,
    NonPositiveScale,
    InvalidOrder,
    NonMonotonicIndex,
    AbsentColumn,
    MismatchedWidths,
    InsufficientBaseline,
    LayerOutOfRange,
    SceneOutOfFrame,
    IoFailure,
    InvalidArgument,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace filagauge
