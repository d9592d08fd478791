#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hscal/errors.hpp"

namespace hscal {

enum class Units { RawCounts, ReflectanceFactor };

// Sentinel for pixels with no valid source data (resampling support, mosaic
// gaps). Kept finite so reflectance cubes stay finite-valued; persisted as
// the ENVI `data ignore value`.
inline constexpr double kNoData = -9999.0;

inline bool is_no_data(double v) { return v == kNoData; }

// Rectangular region in (sample, line) coordinates.
struct Roi {
    int sample0 = 0;
    int line0 = 0;
    int width = 0;
    int height = 0;

    int sample_end() const { return sample0 + width; }
    int line_end() const { return line0 + height; }
};

// Single-band image. x runs across-track (samples), y along-track (lines).
struct Image2D {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    Image2D() = default;
    Image2D(int w, int h, double fill = 0.0)
        : width(w), height(h), v(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return v.size(); }
};

// Hyperspectral data cube.
//
// Canonical memory layout is band-sequential: each band is a contiguous
// (line, sample) plane, data[(band * lines + line) * samples + sample].
// Interleave conversion happens only at the IO boundary.
struct SpectralCube {
    int samples = 0;  // across-track (X)
    int lines = 0;    // along-track (Y)
    int bands = 0;
    std::vector<double> wavelengths;  // nm, strictly increasing, one per band
    std::vector<double> data;
    double code_max = 0.0;  // max representable DN of the source detector; 0 = n/a
    Units units = Units::RawCounts;
    std::map<std::string, std::string> metadata;

    SpectralCube() = default;
    SpectralCube(int n_samples, int n_lines, int n_bands, std::vector<double> wl,
                 double fill = 0.0)
        : samples(n_samples),
          lines(n_lines),
          bands(n_bands),
          wavelengths(std::move(wl)),
          data(static_cast<std::size_t>(n_samples) * n_lines * n_bands, fill) {}

    std::size_t index(int line, int sample, int band) const {
        return (static_cast<std::size_t>(band) * lines + line) * samples + sample;
    }

    double& at(int line, int sample, int band) { return data[index(line, sample, band)]; }
    double at(int line, int sample, int band) const { return data[index(line, sample, band)]; }

    double* band_plane(int band) {
        return data.data() + static_cast<std::size_t>(band) * lines * samples;
    }
    const double* band_plane(int band) const {
        return data.data() + static_cast<std::size_t>(band) * lines * samples;
    }

    std::size_t plane_size() const { return static_cast<std::size_t>(lines) * samples; }
    std::size_t size() const { return data.size(); }

    bool same_shape(const SpectralCube& o) const {
        return samples == o.samples && lines == o.lines && bands == o.bands;
    }

    Image2D band_image(int band) const {
        Image2D img(samples, lines);
        const double* p = band_plane(band);
        std::copy(p, p + plane_size(), img.v.begin());
        return img;
    }

    void set_band_image(int band, const Image2D& img) {
        std::copy(img.v.begin(), img.v.end(), band_plane(band));
    }

    // Throws if dimensions, wavelength monotonicity, or the reflectance
    // finiteness rule are violated.
    void validate() const;

    void check_roi(const Roi& roi) const;
};

// Boolean companion to a cube, same indexing.
struct CubeMask {
    int samples = 0;
    int lines = 0;
    int bands = 0;
    std::vector<std::uint8_t> v;

    CubeMask() = default;
    CubeMask(int n_samples, int n_lines, int n_bands, bool fill = false)
        : samples(n_samples),
          lines(n_lines),
          bands(n_bands),
          v(static_cast<std::size_t>(n_samples) * n_lines * n_bands, fill ? 1 : 0) {}

    std::size_t index(int line, int sample, int band) const {
        return (static_cast<std::size_t>(band) * lines + line) * samples + sample;
    }

    bool get(int line, int sample, int band) const { return v[index(line, sample, band)] != 0; }
    void set(int line, int sample, int band, bool b) { v[index(line, sample, band)] = b ? 1 : 0; }

    std::size_t count() const;
};

std::vector<double> linspace(double lo, double hi, int n);

// Parses "sample0,line0,width,height".
Roi parse_roi(const std::string& text);

}  // namespace hscal
