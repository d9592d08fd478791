#pragma once

#include <string>
#include <vector>

#include "hscal/errors.hpp"

namespace hscal {

enum class CurveKind {
    Reflectance,        // certified reflectance factor, (0, 1.1]
    QuantumEfficiency,  // fraction, [0, 1]
    RelativePower,      // illuminant SPD, arbitrary positive scale
    Transmission,       // fraction, [0, 1]
    RelativeEfficiency  // product curves
};

// A sampled per-wavelength curve with strictly increasing knots.
// Evaluation is piecewise linear; extrapolation is forbidden.
struct SpectralCurve {
    std::vector<double> wavelengths;  // nm
    std::vector<double> values;
    CurveKind kind = CurveKind::RelativeEfficiency;

    std::size_t size() const { return wavelengths.size(); }
    double min_wavelength() const { return wavelengths.front(); }
    double max_wavelength() const { return wavelengths.back(); }

    // Linear interpolation; throws DomainError outside [min, max].
    double value_at(double wavelength_nm) const;

    std::vector<double> resample(const std::vector<double>& targets) const;

    double peak_value() const;

    void validate() const;
};

// Laboratory-certified panel reflectance curve.
struct CertifiedCurve {
    SpectralCurve curve;
    double nominal_reflectance = 0.0;  // e.g. 0.99 for a "99%" standard

    double value_at(double wavelength_nm) const { return curve.value_at(wavelength_nm); }
    std::vector<double> resample(const std::vector<double>& targets) const {
        return curve.resample(targets);
    }
};

// CSV parsers. Header rows are required: `wavelength_nm,reflectance` for
// certified curves, `wavelength_nm,value` for generic curves.
CertifiedCurve parse_certified_curve(const std::string& csv_text, double nominal_reflectance);
SpectralCurve parse_curve_csv(const std::string& csv_text, CurveKind kind);

std::string curve_to_csv(const SpectralCurve& curve, const std::string& value_column);

}  // namespace hscal
