#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hscal/cube.hpp"
#include "hscal/curve.hpp"
#include "hscal/detector_map.hpp"
#include "hscal/skew_normal.hpp"

namespace hscal {

// Fixed-pattern (dark current) offsets averaged from a blocked-optics scan.
struct DarkFrame {
    DetectorMap offsets;  // counts, per (sample, band)
    int source_lines = 0;
    std::string integration_tag;
};

// Per-pixel sensitivity gains, normalized to per-band median 1.
struct FlatField {
    DetectorMap gains;
};

enum class PanelStatistic { Mean, Median, SkewMode };

PanelStatistic parse_panel_statistic(const std::string& name);
std::string to_string(PanelStatistic s);

// Robust per-column panel measurement plus per-pixel diagnostics.
struct PanelStats {
    DetectorMap statistic;          // chosen estimator, dark-subtracted counts
    DetectorMap mean;               // plain mean, for comparison
    DetectorMap mean_mode_delta;    // mean - statistic, per pixel
    DetectorMask saturated;         // any line in the ROI at/above threshold
};

// One reference standard: certified curve + where it sits in the scan +
// measured column statistics at matching acquisition settings.
struct ReferencePanel {
    CertifiedCurve certified;
    Roi roi;
    DetectorMap stats;      // kNoData outside the ROI's sample span
    DetectorMask sat_mask;  // true where the panel cannot be used
};

// Per-pixel linear DN = gain * R + offset model from multiple standards.
struct LinearCalibration {
    DetectorMap gain;
    DetectorMap offset;
    DetectorCountMap n_targets_used;
    std::vector<std::string> warnings;
};

// --- dark current ---

// Mean over scan lines of a blocked-optics cube. Requires >= 2 lines; a
// warning string is produced below 32 lines.
DarkFrame estimate_dark(const SpectralCube& dark_scan, std::vector<std::string>* warnings = nullptr);

// cube - offsets, broadcast over lines. Negatives are preserved and the
// result is tagged `dark subtracted` in metadata.
SpectralCube subtract_dark(const SpectralCube& cube, const DarkFrame& dark, int threads = 1);

SpectralCube add_dark(const SpectralCube& cube, const DarkFrame& dark, int threads = 1);

// --- flat field ---

FlatField build_flat_field(const SpectralCube& uniform_scan, const DarkFrame& dark,
                           int threads = 1);

SpectralCube apply_flat_field(const SpectralCube& cube, const FlatField& flat, int threads = 1);

// --- saturation ---

inline constexpr double kSaturationExclusionFraction = 0.98;

CubeMask saturation_mask(const SpectralCube& cube, double fraction = kSaturationExclusionFraction);

// --- panel statistics ---

// Reduces each ROI column of dark-subtracted counts by the chosen method.
// SkewMode needs an ROI height of at least 20 lines.
PanelStats robust_panel_statistic(const SpectralCube& cube, const DarkFrame& dark, const Roi& roi,
                                  PanelStatistic method, int threads = 1);

// Builds a ReferencePanel from a raw panel scan (saturation is tested on the
// raw counts before dark subtraction).
ReferencePanel build_reference_panel(const SpectralCube& panel_scan, const DarkFrame& dark,
                                     const Roi& roi, CertifiedCurve certified,
                                     PanelStatistic method, int threads = 1);

// --- reflectance ---

// R = (DN - dark) / panelStat * certified(band). The panel must be
// unsaturated in every band; its ROI must span all cube samples.
SpectralCube single_target_reflectance(const SpectralCube& cube, const DarkFrame& dark,
                                       const ReferencePanel& panel, int threads = 1);

// Least-squares DN = gain*R + offset per (sample, band) over all unsaturated
// panels. Pixels with fewer than two usable panels fall back to a
// single-target gain with offset 0 and are reported in `warnings`.
LinearCalibration fit_multi_target(const std::vector<ReferencePanel>& panels,
                                   const std::vector<double>& cube_wavelengths, int threads = 1);

// Same fit but pooled across samples: one line per band.
LinearCalibration fit_multi_target_global(const std::vector<ReferencePanel>& panels,
                                          const std::vector<double>& cube_wavelengths);

SpectralCube apply_linear_calibration(const SpectralCube& cube, const DarkFrame& dark,
                                      const LinearCalibration& cal, int threads = 1);

// Convenience composition for a standard that fills the whole field of view:
// flat-field construction and reflectance scaling in one step.
SpectralCube calibrate_full_fov_panel(const SpectralCube& cube, const DarkFrame& dark,
                                      const SpectralCube& panel_scan,
                                      const CertifiedCurve& certified, PanelStatistic method,
                                      int threads = 1);

// Optional final clamp for export.
SpectralCube clamp_reflectance(const SpectralCube& cube, double lo = 0.0, double hi = 1.1);

}  // namespace hscal
