#include "hscal/planner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hscal/parallel.hpp"

namespace hscal {

SpectralCurve system_efficiency(const SpectralCurve& quantum_efficiency,
                                const SpectralCurve& illuminant, const SpectralCurve* filter) {
    quantum_efficiency.validate();
    illuminant.validate();
    if (filter) filter->validate();

    double lo = std::max(quantum_efficiency.min_wavelength(), illuminant.min_wavelength());
    double hi = std::min(quantum_efficiency.max_wavelength(), illuminant.max_wavelength());
    if (filter) {
        lo = std::max(lo, filter->min_wavelength());
        hi = std::min(hi, filter->max_wavelength());
    }
    if (!(lo < hi))
        throw DomainError("efficiency curves have no common wavelength interval");

    std::set<double> knots;
    for (const SpectralCurve* c :
         {&quantum_efficiency, &illuminant, static_cast<const SpectralCurve*>(filter)}) {
        if (!c) continue;
        for (double w : c->wavelengths)
            if (w >= lo && w <= hi) knots.insert(w);
    }
    knots.insert(lo);
    knots.insert(hi);

    SpectralCurve out;
    out.kind = CurveKind::RelativeEfficiency;
    for (double w : knots) {
        double v = quantum_efficiency.value_at(w) * illuminant.value_at(w);
        if (filter) v *= filter->value_at(w);
        out.wavelengths.push_back(w);
        out.values.push_back(v);
    }
    return out;
}

double integration_multiplier(const SpectralCurve& eff_without, const SpectralCurve& eff_with) {
    if (eff_without.min_wavelength() != eff_with.min_wavelength() ||
        eff_without.max_wavelength() != eff_with.max_wavelength())
        throw DomainError("efficiency curves must share a wavelength domain");
    const double peak_without = eff_without.peak_value();
    const double peak_with = eff_with.peak_value();
    if (!(peak_without > 0.0) || !(peak_with > 0.0))
        throw DegenerateError("efficiency peak is zero; integration multiplier undefined");
    return peak_without / peak_with;
}

double sharpness(const Image2D& band_image) {
    if (band_image.v.empty()) throw ParameterError("sharpness of an empty image is undefined");
    double mean = 0.0;
    for (double v : band_image.v) mean += v;
    mean /= band_image.v.size();
    double var = 0.0;
    for (double v : band_image.v) {
        const double d = v - mean;
        var += d * d;
    }
    return var / band_image.v.size();
}

void FocusSeries::validate() const {
    if (measurements.size() < 3)
        throw InsufficientDataError("focus series needs at least 3 distances, got " +
                                    std::to_string(measurements.size()));
    std::set<double> distances;
    for (const auto& [d, cube] : measurements) {
        distances.insert(d);
        if (cube.wavelengths != measurements.front().second.wavelengths)
            throw DimensionError("focus series cubes must share wavelengths");
    }
    if (distances.size() != measurements.size())
        throw ParameterError("focus series distances must be distinct");
}

std::vector<FocusPoint> focus_curves(const FocusSeries& series, int threads) {
    series.validate();

    std::vector<std::size_t> order(series.measurements.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return series.measurements[a].first < series.measurements[b].first;
    });

    const int bands = series.measurements.front().second.bands;
    const int n = static_cast<int>(order.size());
    std::vector<FocusPoint> points(bands);

    parallel_chunks(bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        std::vector<double> s(n), d(n);
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int k = 0; k < n; ++k) {
                const auto& [dist, cube] = series.measurements[order[k]];
                d[k] = dist;
                s[k] = sharpness(cube.band_image(b));
            }

            FocusPoint pt;
            pt.wavelength_nm = series.measurements.front().second.wavelengths[b];

            int peak = 0;
            for (int k = 1; k < n; ++k)
                if (s[k] > s[peak]) peak = k;

            const double spread = *std::max_element(s.begin(), s.end()) -
                                  *std::min_element(s.begin(), s.end());
            if (spread <= 1e-12 * std::max(1.0, std::fabs(s[peak]))) {
                pt.no_peak = true;
                pt.optimal_distance = d[peak];
                pt.peak_sharpness = s[peak];
            } else if (peak == 0 || peak == n - 1) {
                pt.at_edge = true;
                pt.optimal_distance = d[peak];
                pt.peak_sharpness = s[peak];
            } else {
                // parabola through three (distance, sharpness) points; handles
                // non-uniform distance grids
                const double x0 = d[peak - 1], x1 = d[peak], x2 = d[peak + 1];
                const double y0 = s[peak - 1], y1 = s[peak], y2 = s[peak + 1];
                const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
                const double a =
                    (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
                const double bb = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) +
                                   x0 * x0 * (y1 - y2)) /
                                  denom;
                if (a < 0.0) {
                    pt.optimal_distance = -bb / (2.0 * a);
                    pt.optimal_distance = std::clamp(pt.optimal_distance, x0, x2);
                    const double cc = y1 - a * x1 * x1 - bb * x1;
                    pt.peak_sharpness = a * pt.optimal_distance * pt.optimal_distance +
                                        bb * pt.optimal_distance + cc;
                } else {
                    pt.optimal_distance = x1;
                    pt.peak_sharpness = y1;
                }
            }
            points[b] = pt;
        }
    });
    return points;
}

std::string focus_points_to_csv(const std::vector<FocusPoint>& points) {
    std::ostringstream oss;
    oss << "wavelength_nm,optimal_distance,peak_sharpness,at_edge\n";
    for (const auto& p : points)
        oss << p.wavelength_nm << "," << p.optimal_distance << "," << p.peak_sharpness << ","
            << (p.at_edge ? 1 : 0) << "\n";
    return oss.str();
}

double recommend_integration(double measured_max_dn, double current_integration, double code_max,
                             double target_fraction) {
    if (!(measured_max_dn > 0.0) || !(current_integration > 0.0) || !(code_max > 0.0))
        throw ParameterError("integration recommendation inputs must be positive");
    if (!(target_fraction > 0.0 && target_fraction <= 1.0))
        throw ParameterError("target fraction must be in (0, 1]");
    if (measured_max_dn >= code_max)
        throw SaturatedInputError(
            "measured maximum " + std::to_string(measured_max_dn) +
            " is at or above code max " + std::to_string(code_max) +
            "; cannot recommend from clipped data");
    return current_integration * (target_fraction * code_max) / measured_max_dn;
}

}  // namespace hscal
