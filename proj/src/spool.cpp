#include <filagauge/spool.hpp>

#include <cmath>
#include <numbers>

namespace filagauge {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void validate(const SpoolSpec& spec) {
    if (!(spec.radius_mm > 0.0)) {
        throw Error(Errc::InvalidArgument, "spool radius must be > 0");
    }
    if (spec.turns_per_layer < 1) {
        throw Error(Errc::InvalidArgument, "turns per layer must be >= 1");
    }
    if (spec.layers < 1) {
        throw Error(Errc::InvalidArgument, "layer count must be >= 1");
    }
    if (!(spec.filament_mm > 0.0)) {
        throw Error(Errc::InvalidArgument, "filament diameter must be > 0");
    }
}

double layer_length_mm(const SpoolSpec& spec, int layer) {
    validate(spec);
    if (layer < 1 || layer > spec.layers) {
        throw Error(Errc::LayerOutOfRange,
                    "layer " + std::to_string(layer) + " not in [1, " +
                        std::to_string(spec.layers) + "]");
    }
    return kTwoPi * spec.turns_per_layer * (spec.radius_mm + (layer - 1) * spec.filament_mm);
}

double total_length_mm(const SpoolSpec& spec) {
    validate(spec);
    const double m = spec.layers;
    // sum_{i=2..m} (i-1)*d collapses to d*m*(m-1)/2 (empty for m = 1)
    return kTwoPi * spec.turns_per_layer *
           (spec.radius_mm * m + spec.filament_mm * m * (m - 1.0) / 2.0);
}

std::vector<LayerSchedule> speed_schedule(const SpoolSpec& spec, double feed_rate_mm_s) {
    validate(spec);
    if (!(feed_rate_mm_s > 0.0)) {
        throw Error(Errc::InvalidArgument, "feed rate must be > 0");
    }

    std::vector<LayerSchedule> schedule;
    schedule.reserve(spec.layers);
    double elapsed_s = 0.0;
    for (int k = 1; k <= spec.layers; ++k) {
        const double circumference = kTwoPi * (spec.radius_mm + (k - 1) * spec.filament_mm);
        const double length = circumference * spec.turns_per_layer;
        const double duration = length / feed_rate_mm_s;
        elapsed_s += duration;
        schedule.push_back({k, length, feed_rate_mm_s / circumference, duration, elapsed_s});
    }
    return schedule;
}

} // namespace filagauge
