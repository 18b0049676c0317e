#pragma once

#include <filagauge/error.hpp>

#include <vector>

namespace filagauge {

/// Spool winding geometry: concentric layers with radial pitch d.
struct SpoolSpec {
    double radius_mm = 50.0;  // R, barrel radius
    int turns_per_layer = 10; // n, diameters per spool width
    int layers = 1;           // m
    double filament_mm = 1.75; // d
};

void validate(const SpoolSpec& spec);

/// Filament length of layer k (1-based): 2*pi*n*(R + (k-1)*d).
/// Throws Error{LayerOutOfRange}.
double layer_length_mm(const SpoolSpec& spec, int layer);

/// Total wound length: 2*pi*n*(R*m + sum_{i=2..m} (i-1)*d).
double total_length_mm(const SpoolSpec& spec);

struct LayerSchedule {
    int layer = 0;
    double length_mm = 0.0;
    double omega_rev_s = 0.0;  // winding speed while on this layer
    double duration_s = 0.0;
    double switch_time_s = 0.0; // cumulative time when this layer completes
};

/// Stepwise winding-speed schedule for a constant feed rate:
/// omega_k = feed / (2*pi*(R + (k-1)*d)), strictly decreasing in k.
std::vector<LayerSchedule> speed_schedule(const SpoolSpec& spec, double feed_rate_mm_s);

} // namespace filagauge
