#pragma once

#include <string>
#include <vector>

#include "hscal/cube.hpp"

namespace hscal {

// Relative effective pixel size per across-track sample position.
struct SensorModel {
    std::vector<double> effective_size;  // > 0, relative units (1.0 = reference)
    double reference_pitch = 1.0;

    int size() const { return static_cast<int>(effective_size.size()); }
    double extent() const;  // sum of effective sizes
    // physical center of pixel i: prefix sum + half its own size
    std::vector<double> pixel_centers() const;
    void validate() const;
};

// Y-scale correction factor derived from a geometric target.
struct ScaleEstimate {
    double factor = 1.0;  // true length / measured length
    std::string source;
};

inline constexpr double kScaleSanityLo = 0.5;
inline constexpr double kScaleSanityHi = 2.0;

// CSV `sample_index,effective_size`, indices contiguous from 0.
SensorModel parse_sensor_model(const std::string& csv_text);
std::string sensor_model_to_csv(const SensorModel& model);

// Resamples each (line, band) row from the model's non-uniform pixel grid
// onto a uniform grid of out_samples positions spanning the same physical
// extent (linear interpolation between pixel centers, edges clamped).
SpectralCube resample_across_track(const SpectralCube& cube, const SensorModel& model,
                                   int out_samples, int threads = 1);

ScaleEstimate estimate_scale_from_target(double known_length_mm, double measured_pixels,
                                         double nominal_pixel_pitch_mm,
                                         const std::string& source = "geometric target");

// Linear interpolation along Y to round(lines * factor) lines per
// (sample, band) column.
SpectralCube rescale_aspect(const SpectralCube& cube, double factor, int threads = 1);

}  // namespace hscal
