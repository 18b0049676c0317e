#include <filagauge/error.hpp>

namespace filagauge {

const char* to_string(Errc code) noexcept {
    switch (code) {
    case Errc::FileUnreadable: return "FileUnreadable";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::RoiOutOfBounds: return "RoiOutOfBounds";
    case Errc::NoFilament: return "NoFilament";
    case Errc::AmbiguousBand: return "AmbiguousBand";
    case Errc::MaskTooSparse: return "MaskTooSparse";
    case Errc::ShiftOutOfRange: return "ShiftOutOfRange";
    case Errc::EmptyCenterline: return "EmptyCenterline";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::DegenerateSamples: return "DegenerateSamples";
    case Errc::NonPositiveDistance: return "NonPositiveDistance";
    case Errc::NonPositiveScale: return "NonPositiveScale";
    case Errc::InvalidOrder: return "InvalidOrder";
    case Errc::NonMonotonicIndex: return "NonMonotonicIndex";
    case Errc::AbsentColumn: return "AbsentColumn";
    case Errc::MismatchedWidths: return "MismatchedWidths";
    case Errc::InsufficientBaseline: return "InsufficientBaseline";
    case Errc::LayerOutOfRange: return "LayerOutOfRange";
    case Errc::SceneOutOfFrame: return "SceneOutOfFrame";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

} // namespace filagauge
