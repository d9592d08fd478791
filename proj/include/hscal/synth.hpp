#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hscal/cube.hpp"
#include "hscal/curve.hpp"
#include "hscal/detector_map.hpp"
#include "hscal/geometric.hpp"

namespace hscal {

// Everything the forward simulator degrades a scene with. With a fixed seed
// the output is byte-identical regardless of worker count (counter-based
// random streams).
struct AcquisitionModel {
    DetectorMap dark;                 // counts, per (sample, band)
    DetectorMap gains;                // multiplicative striping, > 0
    std::vector<double> illumination; // per raw sample, relative
    std::vector<double> efficiency;   // per band, relative
    double integration = 1.0;         // counts per unit reflectance at unit gain
    double stray_light = 0.0;         // additive counts present whenever light is
    double read_noise_sigma = 0.0;    // counts
    bool shot_noise = false;
    double shot_noise_scale = 1.0;    // counts of variance per count of signal
    double code_max = 4095.0;
    bool quantize = true;
    std::optional<SensorModel> sensor;  // across-track distortion
    double scan_speed_factor = 1.0;     // true length / measured length along Y
    std::uint64_t seed = 0;

    // identity model sized for a scene
    static AcquisitionModel identity(int samples, int bands, double code_max = 4095.0);
};

struct SimulationResult {
    SpectralCube raw;              // detector counts, units RawCounts
    CubeMask clipped;              // true where the quantizer clipped
    SpectralCube distorted_truth;  // scene reflectance after geometric distortion
};

// DN = quantize(gain * illum * efficiency * integration * R_distorted + dark + noise).
// The geometric distortion samples the scene through the sensor model's
// non-uniform pixel grid and the scan-speed factor.
SimulationResult simulate_acquisition(const SpectralCube& scene, const AcquisitionModel& model,
                                      int threads = 1);

// Replaces a seeded random fraction of samples with dirt_level * value
// (asymmetric low-side outliers, the way dirt darkens a reference standard).
std::vector<double> contaminate_panel(const std::vector<double>& samples, double dirt_fraction,
                                      double dirt_level, std::uint64_t seed);

// --- scene builders ---

SpectralCube make_flat_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                             double reflectance);

// reflectance ramps across-track from lo to hi
SpectralCube make_ramp_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                             double lo_reflectance, double hi_reflectance);

// dark ticks on a bright background, repeating along the chosen axis
SpectralCube make_ruler_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                              int tick_period, int tick_width, bool ticks_along_x,
                              double background = 0.9, double tick = 0.1);

// smooth seeded random field (sum of Gaussian blobs), identical per band
// scaled by a per-band factor ramp; `texture` adds fine-grained deterministic
// detail (registration needs broadband content)
SpectralCube make_blob_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                             int blob_count, std::uint64_t seed, double lo = 0.15,
                             double hi = 0.85, double texture = 0.0);

// paints a region with a certified curve's per-band reflectance
void paint_panel_region(SpectralCube& scene, const Roi& roi, const CertifiedCurve& certified);

void paint_constant_region(SpectralCube& scene, const Roi& roi, double reflectance);

// --- model component builders ---

DetectorMap make_dark_map(int samples, int bands, double base, double amplitude,
                          std::uint64_t seed);

// multiplicative column striping with the given total spread (max/min - 1)
DetectorMap make_striping_gains(int samples, int bands, double spread, std::uint64_t seed);

// uneven but smooth illumination profile across the field of view
std::vector<double> make_uneven_illumination(int samples, double amplitude, std::uint64_t seed);

// V-shaped effective-pixel-size profile: 1.0 at the edges dropping to
// (1 - depth) at the center
SensorModel make_v_sensor_model(int samples, double depth);

}  // namespace hscal
