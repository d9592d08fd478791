#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hscal/cube.hpp"

namespace hscal {

// Rigid shift between two images. Positive dx means the second image's
// content sits dx pixels to the right of the first's (b(x) = a(x - dx)).
struct Translation2D {
    double dx = 0.0;
    double dy = 0.0;
    double confidence = 0.0;  // normalized correlation peak in [0, 1]
};

struct TranslationOptions {
    // Gaussian low-pass on the normalized cross-power, as a fraction of
    // Nyquist. Match this to the true bandwidth of the blurrier image when
    // registering resampled data.
    double spectral_cutoff = 0.35;
    // Hann-window the inputs to suppress the wrap-around discontinuity of
    // the DFT on non-cyclic data.
    bool hann_window = true;
};

// Phase correlation, integer peak refined by a parabolic fit of the 3x3
// neighborhood. Spectrum bins with negligible cross-power are dropped (they
// carry only rounding noise). Throws NoSignalError on constant input.
Translation2D estimate_translation(const Image2D& a, const Image2D& b,
                                   const TranslationOptions& opts = {});

// Bilinear resampling of every band onto a reference grid. The transform
// maps source pixel centers to reference coordinates as
//   x_ref = scale_x * (x_src + 0.5) - 0.5 + offset.dx   (same for y),
// so scale 1 / offset 0 is the identity. Pixels without source support get
// kNoData.
SpectralCube resample_to_reference(const SpectralCube& cube, double scale_x, double scale_y,
                                   const Translation2D& offset, int ref_samples, int ref_lines,
                                   int threads = 1);

struct CoregisterOptions {
    // Known pixel-pitch ratio; when absent, the samples ratio seeds an
    // iterative refinement from the measured displacement field.
    std::optional<double> scale;
    std::optional<std::pair<int, int>> tie_bands;  // (reference band, moving band)
    double min_confidence = 0.1;
    int threads = 1;
};

struct CoregisterResult {
    SpectralCube merged;
    double scale = 1.0;
    Translation2D translation;
    int reference_tie_band = 0;
    int moving_tie_band = 0;
};

// Registers a second (typically SWIR) cube onto a reference (typically VNIR)
// grid using the spectrally nearest band pair, then concatenates bands:
// reference bands below the overlap midpoint wavelength, moving bands above.
CoregisterResult coregister(const SpectralCube& reference, const SpectralCube& moving,
                            const CoregisterOptions& opts = {});

struct StripPlacement {
    SpectralCube cube;
    double x = 0.0;  // nominal offset of the strip origin in mosaic pixels
    double y = 0.0;
};

struct StripLayout {
    std::vector<StripPlacement> strips;
    int overlap_threshold = 16;     // minimum overlap in pixels between neighbours
    double max_correction = 10.0;   // px; refinement beyond this is a misalignment
    bool fallback_to_nominal = false;
    std::optional<int> reference_band;  // default: band with best SNR proxy
};

struct MosaicResult {
    SpectralCube mosaic;
    std::vector<Translation2D> refined_offsets;  // per strip, absolute
    double origin_x = 0.0;  // mosaic pixel (0, 0) in layout coordinates
    double origin_y = 0.0;
    std::vector<std::string> warnings;
};

// Refines nominal offsets pairwise on the reference band, then composites
// with linear feathering across overlaps. No-data pixels never contribute.
MosaicResult mosaic(const StripLayout& layout, int threads = 1);

}  // namespace hscal
