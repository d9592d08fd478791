#include "hscal/synth.hpp"

#include <algorithm>
#include <cmath>

#include "hscal/parallel.hpp"
#include "hscal/rng.hpp"

namespace hscal {

AcquisitionModel AcquisitionModel::identity(int samples, int bands, double code_max) {
    AcquisitionModel m;
    m.dark = DetectorMap(samples, bands, 0.0);
    m.gains = DetectorMap(samples, bands, 1.0);
    m.illumination.assign(samples, 1.0);
    m.efficiency.assign(bands, 1.0);
    m.code_max = code_max;
    m.quantize = false;
    return m;
}

namespace {

double sample_scene_linear(const SpectralCube& scene, double x, double y, int band) {
    const double xc = std::clamp(x, 0.0, scene.samples - 1.0);
    const double yc = std::clamp(y, 0.0, scene.lines - 1.0);
    const int x0 = std::clamp(static_cast<int>(xc), 0, std::max(scene.samples - 2, 0));
    const int y0 = std::clamp(static_cast<int>(yc), 0, std::max(scene.lines - 2, 0));
    const double tx = xc - x0;
    const double ty = yc - y0;
    const int x1 = std::min(x0 + 1, scene.samples - 1);
    const int y1 = std::min(y0 + 1, scene.lines - 1);
    return (1 - ty) * ((1 - tx) * scene.at(y0, x0, band) + tx * scene.at(y0, x1, band)) +
           ty * ((1 - tx) * scene.at(y1, x0, band) + tx * scene.at(y1, x1, band));
}

}  // namespace

SimulationResult simulate_acquisition(const SpectralCube& scene, const AcquisitionModel& model,
                                      int threads) {
    scene.validate();

    const int raw_samples = model.sensor ? model.sensor->size() : scene.samples;
    const int raw_lines = model.scan_speed_factor == 1.0
                              ? scene.lines
                              : static_cast<int>(std::lround(scene.lines / model.scan_speed_factor));
    const int bands = scene.bands;

    if (model.dark.samples != raw_samples || model.dark.bands != bands ||
        model.gains.samples != raw_samples || model.gains.bands != bands ||
        static_cast<int>(model.illumination.size()) != raw_samples ||
        static_cast<int>(model.efficiency.size()) != bands)
        throw ParameterError("acquisition model dimensions do not match the scene/sensor");
    if (!(model.read_noise_sigma >= 0.0)) throw ParameterError("read noise sigma must be >= 0");
    for (double g : model.gains.v)
        if (!(g > 0.0)) throw ParameterError("acquisition gains must be positive");

    // geometric distortion: sample the scene at the sensor's pixel centers
    // (across-track) and at the erroneous scan pitch (along-track)
    std::vector<double> x_positions(raw_samples);
    if (model.sensor) {
        model.sensor->validate();
        const std::vector<double> centers = model.sensor->pixel_centers();
        const double extent = model.sensor->extent();
        for (int s = 0; s < raw_samples; ++s)
            x_positions[s] = centers[s] / extent * scene.samples - 0.5;
    } else {
        for (int s = 0; s < raw_samples; ++s) x_positions[s] = s;
    }

    SpectralCube distorted(raw_samples, raw_lines, bands, scene.wavelengths);
    distorted.units = Units::ReflectanceFactor;
    parallel_chunks(bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < raw_lines; ++y) {
                const double ys = model.scan_speed_factor == 1.0
                                      ? y
                                      : (y + 0.5) * model.scan_speed_factor - 0.5;
                for (int s = 0; s < raw_samples; ++s)
                    distorted.at(y, s, b) = sample_scene_linear(scene, x_positions[s], ys, b);
            }
        }
    });

    SpectralCube raw(raw_samples, raw_lines, bands, scene.wavelengths);
    raw.units = Units::RawCounts;
    raw.code_max = model.code_max;
    CubeMask clipped(raw_samples, raw_lines, bands);

    parallel_chunks(bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < raw_lines; ++y) {
                for (int s = 0; s < raw_samples; ++s) {
                    const double photo = model.gains.at(s, b) * model.illumination[s] *
                                         model.efficiency[b] * model.integration *
                                         distorted.at(y, s, b);
                    double dn = photo + model.stray_light + model.dark.at(s, b);
                    if (model.read_noise_sigma > 0.0)
                        dn += model.read_noise_sigma * rng::gaussian(model.seed, y, s, b, 0);
                    if (model.shot_noise && photo > 0.0)
                        dn += std::sqrt(photo * model.shot_noise_scale) *
                              rng::gaussian(model.seed, y, s, b, 1);
                    if (model.quantize) {
                        dn = std::nearbyint(dn);
                        if (dn < 0.0) dn = 0.0;
                        if (dn >= model.code_max) {
                            dn = model.code_max;
                            clipped.set(y, s, b, true);
                        }
                    } else if (model.code_max > 0.0 && dn >= model.code_max) {
                        clipped.set(y, s, b, true);
                    }
                    raw.at(y, s, b) = dn;
                }
            }
        }
    });

    SimulationResult out;
    out.raw = std::move(raw);
    out.clipped = std::move(clipped);
    out.distorted_truth = std::move(distorted);
    return out;
}

std::vector<double> contaminate_panel(const std::vector<double>& samples, double dirt_fraction,
                                      double dirt_level, std::uint64_t seed) {
    if (!(dirt_fraction >= 0.0 && dirt_fraction <= 0.5))
        throw ParameterError("dirt fraction must be in [0, 0.5]");
    if (!(dirt_level > 0.0 && dirt_level < 1.0))
        throw ParameterError("dirt level must be in (0, 1)");
    std::vector<double> out = samples;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (rng::uniform(seed, i, 0x0D127) < dirt_fraction) out[i] *= dirt_level;
    return out;
}

SpectralCube make_flat_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                             double reflectance) {
    SpectralCube scene(samples, lines, bands, linspace(lo_nm, hi_nm, bands), reflectance);
    scene.units = Units::ReflectanceFactor;
    return scene;
}

SpectralCube make_ramp_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                             double lo_reflectance, double hi_reflectance) {
    SpectralCube scene = make_flat_scene(samples, lines, bands, lo_nm, hi_nm, 0.0);
    for (int b = 0; b < bands; ++b)
        for (int y = 0; y < lines; ++y)
            for (int s = 0; s < samples; ++s)
                scene.at(y, s, b) =
                    lo_reflectance +
                    (hi_reflectance - lo_reflectance) * s / std::max(samples - 1, 1);
    return scene;
}

SpectralCube make_ruler_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                              int tick_period, int tick_width, bool ticks_along_x,
                              double background, double tick) {
    SpectralCube scene = make_flat_scene(samples, lines, bands, lo_nm, hi_nm, background);
    for (int b = 0; b < bands; ++b)
        for (int y = 0; y < lines; ++y)
            for (int s = 0; s < samples; ++s) {
                const int pos = ticks_along_x ? s : y;
                if (pos % tick_period < tick_width) scene.at(y, s, b) = tick;
            }
    return scene;
}

SpectralCube make_blob_scene(int samples, int lines, int bands, double lo_nm, double hi_nm,
                             int blob_count, std::uint64_t seed, double lo, double hi,
                             double texture) {
    Image2D field(samples, lines, 0.0);
    for (int k = 0; k < blob_count; ++k) {
        const double cx = rng::uniform(seed, k, 1) * samples;
        const double cy = rng::uniform(seed, k, 2) * lines;
        const double sigma = (0.03 + 0.12 * rng::uniform(seed, k, 3)) * std::min(samples, lines);
        const double amp = 2.0 * rng::uniform(seed, k, 4) - 1.0;
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = 0; y < lines; ++y)
            for (int x = 0; x < samples; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                field.at(x, y) += amp * std::exp(-d2 * inv2s2);
            }
    }
    if (texture > 0.0) {
        // fine deterministic grain, lightly smoothed to stay resample-friendly
        for (int y = 0; y < lines; ++y)
            for (int x = 0; x < samples; ++x) {
                double g = 0.0;
                for (int dy = 0; dy <= 1; ++dy)
                    for (int dx = 0; dx <= 1; ++dx)
                        g += rng::uniform(seed, (x + dx) % samples, (y + dy) % lines, 0xF1) - 0.5;
                field.at(x, y) += texture * 0.5 * g;
            }
    }
    const auto [mn_it, mx_it] = std::minmax_element(field.v.begin(), field.v.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = mx > mn ? mx - mn : 1.0;

    SpectralCube scene = make_flat_scene(samples, lines, bands, lo_nm, hi_nm, 0.0);
    for (int b = 0; b < bands; ++b) {
        // mild spectral slope so bands are distinct but correlated
        const double band_scale = 1.0 - 0.2 * b / std::max(bands - 1, 1);
        for (int y = 0; y < lines; ++y)
            for (int x = 0; x < samples; ++x) {
                const double unit = (field.at(x, y) - mn) / span;
                scene.at(y, x, b) = lo + (hi - lo) * unit * band_scale;
            }
    }
    return scene;
}

void paint_panel_region(SpectralCube& scene, const Roi& roi, const CertifiedCurve& certified) {
    scene.check_roi(roi);
    const std::vector<double> refl = certified.resample(scene.wavelengths);
    for (int b = 0; b < scene.bands; ++b)
        for (int y = roi.line0; y < roi.line_end(); ++y)
            for (int s = roi.sample0; s < roi.sample_end(); ++s) scene.at(y, s, b) = refl[b];
}

void paint_constant_region(SpectralCube& scene, const Roi& roi, double reflectance) {
    scene.check_roi(roi);
    for (int b = 0; b < scene.bands; ++b)
        for (int y = roi.line0; y < roi.line_end(); ++y)
            for (int s = roi.sample0; s < roi.sample_end(); ++s) scene.at(y, s, b) = reflectance;
}

DetectorMap make_dark_map(int samples, int bands, double base, double amplitude,
                          std::uint64_t seed) {
    DetectorMap dark(samples, bands);
    for (int b = 0; b < bands; ++b)
        for (int s = 0; s < samples; ++s)
            dark.at(s, b) = base + amplitude * rng::uniform(seed, s, b, 0xDA);
    return dark;
}

DetectorMap make_striping_gains(int samples, int bands, double spread, std::uint64_t seed) {
    // per-column multiplicative striping, constant over bands with a small
    // per-(sample, band) perturbation, normalized into [1 - spread/2, 1 + spread/2]
    DetectorMap gains(samples, bands);
    std::vector<double> column(samples);
    for (int s = 0; s < samples; ++s) column[s] = rng::uniform(seed, s, 0, 0x57);
    for (int b = 0; b < bands; ++b)
        for (int s = 0; s < samples; ++s) {
            const double jitter = 0.1 * (rng::uniform(seed, s, b, 0x58) - 0.5);
            const double unit = std::clamp(column[s] + jitter, 0.0, 1.0);
            gains.at(s, b) = 1.0 - 0.5 * spread + spread * unit;
        }
    return gains;
}

std::vector<double> make_uneven_illumination(int samples, double amplitude, std::uint64_t seed) {
    // low-order Fourier mix: smooth, asymmetric, strictly positive
    const double a1 = rng::uniform(seed, 1, 0x11) - 0.5;
    const double a2 = rng::uniform(seed, 2, 0x11) - 0.5;
    const double a3 = rng::uniform(seed, 3, 0x11) - 0.5;
    const double p1 = rng::uniform(seed, 4, 0x11) * 6.28318530717958648;
    const double p2 = rng::uniform(seed, 5, 0x11) * 6.28318530717958648;
    std::vector<double> illum(samples);
    for (int s = 0; s < samples; ++s) {
        const double t = static_cast<double>(s) / std::max(samples - 1, 1);
        const double wave = a1 * std::sin(6.28318530717958648 * t + p1) +
                            a2 * std::sin(2.0 * 6.28318530717958648 * t + p2) +
                            a3 * (t - 0.5);
        illum[s] = 1.0 + amplitude * wave;
    }
    return illum;
}

SensorModel make_v_sensor_model(int samples, double depth) {
    SensorModel model;
    model.effective_size.resize(samples);
    for (int s = 0; s < samples; ++s) {
        const double t = 2.0 * std::fabs(static_cast<double>(s) / std::max(samples - 1, 1) - 0.5);
        model.effective_size[s] = 1.0 - depth * (1.0 - t);
    }
    model.validate();
    return model;
}

}  // namespace hscal
