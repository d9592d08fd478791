#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hscal/cube.hpp"
#include "hscal/curve.hpp"

namespace hscal {

// Combined spectral efficiency: pointwise product of detector quantum
// efficiency, illuminant power and (optionally) a filter transmission,
// evaluated on the union of knots inside the curves' common interval.
SpectralCurve system_efficiency(const SpectralCurve& quantum_efficiency,
                                const SpectralCurve& illuminant,
                                const SpectralCurve* filter = nullptr);

// Factor by which integration time must grow to restore peak signal after
// inserting a filter: peak(eff_without) / peak(eff_with).
double integration_multiplier(const SpectralCurve& eff_without, const SpectralCurve& eff_with);

// Focus metric: population variance of the band image.
double sharpness(const Image2D& band_image);

// Repeated scans of the same target at different focus distances.
struct FocusSeries {
    std::vector<std::pair<double, SpectralCube>> measurements;  // (distance, cube)

    void validate() const;
};

struct FocusPoint {
    double wavelength_nm = 0.0;
    double optimal_distance = 0.0;
    double peak_sharpness = 0.0;
    bool at_edge = false;  // peak on the first/last distance, unrefined
    bool no_peak = false;  // flat sharpness across all distances
};

// Per band: argmax of sharpness over distances, refined by a parabola
// through the peak and its neighbours.
std::vector<FocusPoint> focus_curves(const FocusSeries& series, int threads = 1);

std::string focus_points_to_csv(const std::vector<FocusPoint>& points);

// New integration time that puts the measured maximum at
// target_fraction * code_max, assuming linear detector response.
double recommend_integration(double measured_max_dn, double current_integration, double code_max,
                             double target_fraction = 0.8);

}  // namespace hscal
