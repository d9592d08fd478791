#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hscal {

// Per-(sample, band) array matching the push-broom detector geometry.
// Dark offsets, flat-field gains, panel statistics and linear-calibration
// coefficients all live on this grid. Band-major, like the cube layout.
struct DetectorMap {
    int samples = 0;
    int bands = 0;
    std::vector<double> v;

    DetectorMap() = default;
    DetectorMap(int n_samples, int n_bands, double fill = 0.0)
        : samples(n_samples), bands(n_bands),
          v(static_cast<std::size_t>(n_samples) * n_bands, fill) {}

    std::size_t index(int sample, int band) const {
        return static_cast<std::size_t>(band) * samples + sample;
    }

    double& at(int sample, int band) { return v[index(sample, band)]; }
    double at(int sample, int band) const { return v[index(sample, band)]; }

    bool same_shape(const DetectorMap& o) const {
        return samples == o.samples && bands == o.bands;
    }
};

struct DetectorMask {
    int samples = 0;
    int bands = 0;
    std::vector<std::uint8_t> v;

    DetectorMask() = default;
    DetectorMask(int n_samples, int n_bands, bool fill = false)
        : samples(n_samples), bands(n_bands),
          v(static_cast<std::size_t>(n_samples) * n_bands, fill ? 1 : 0) {}

    std::size_t index(int sample, int band) const {
        return static_cast<std::size_t>(band) * samples + sample;
    }

    bool get(int sample, int band) const { return v[index(sample, band)] != 0; }
    void set(int sample, int band, bool b) { v[index(sample, band)] = b ? 1 : 0; }
};

struct DetectorCountMap {
    int samples = 0;
    int bands = 0;
    std::vector<int> v;

    DetectorCountMap() = default;
    DetectorCountMap(int n_samples, int n_bands, int fill = 0)
        : samples(n_samples), bands(n_bands),
          v(static_cast<std::size_t>(n_samples) * n_bands, fill) {}

    std::size_t index(int sample, int band) const {
        return static_cast<std::size_t>(band) * samples + sample;
    }

    int& at(int sample, int band) { return v[index(sample, band)]; }
    int at(int sample, int band) const { return v[index(sample, band)]; }
};

}  // namespace hscal
