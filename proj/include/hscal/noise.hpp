#pragma once

#include <vector>

#include "hscal/cube.hpp"

namespace hscal {

struct SnrReport {
    std::vector<double> snr;  // per band, mean/std over the ROI; inf where std == 0
    std::vector<double> wavelengths;
    Roi roi;
    std::vector<std::string> warnings;

    std::string to_csv() const;
};

// Pointwise mean of co-incident scans of the same line(s).
SpectralCube frame_average(const std::vector<SpectralCube>& frames, int threads = 1);

// Per-band mean/std over a spatially uniform ROI.
SnrReport estimate_snr(const SpectralCube& cube, const Roi& roi);

// Least-squares polynomial smoothing weights for a centered window
// (Savitzky-Golay); exposed so tests can check the analytic noise-reduction
// factor sum(w^2).
std::vector<double> savitzky_golay_weights(int window, int degree);

// Polynomial smoothing along the band axis per (line, sample) spectrum.
// Within half a window of a band edge, the polynomial is fitted to the end
// window and evaluated at the edge position, so polynomial spectra up to
// `degree` pass through exactly everywhere.
SpectralCube denoise_spectral(const SpectralCube& cube, int window, int degree, int threads = 1);

// Square median filter of side 2*radius+1 per band, mirror-padded borders.
SpectralCube denoise_spatial_median(const SpectralCube& cube, int radius, int threads = 1);

}  // namespace hscal
