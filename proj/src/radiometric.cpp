#include "hscal/radiometric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hscal/parallel.hpp"

namespace hscal {

namespace {

void require_raw_counts(const SpectralCube& cube, const char* op) {
    if (cube.units != Units::RawCounts)
        throw ParameterError(std::string(op) + " expects a raw-counts cube");
}

void require_detector_shape(const SpectralCube& cube, const DetectorMap& map, const char* what) {
    if (map.samples != cube.samples || map.bands != cube.bands) {
        std::ostringstream oss;
        oss << what << " is " << map.samples << "x" << map.bands << " but cube is "
            << cube.samples << " samples x " << cube.bands << " bands";
        throw DimensionError(oss.str());
    }
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

}  // namespace

PanelStatistic parse_panel_statistic(const std::string& name) {
    if (name == "mean") return PanelStatistic::Mean;
    if (name == "median") return PanelStatistic::Median;
    if (name == "skew_mode") return PanelStatistic::SkewMode;
    throw ParameterError("unknown panel statistic '" + name + "'");
}

std::string to_string(PanelStatistic s) {
    switch (s) {
        case PanelStatistic::Mean: return "mean";
        case PanelStatistic::Median: return "median";
        case PanelStatistic::SkewMode: return "skew_mode";
    }
    return "mean";
}

DarkFrame estimate_dark(const SpectralCube& dark_scan, std::vector<std::string>* warnings) {
    require_raw_counts(dark_scan, "estimate_dark");
    if (dark_scan.lines < 2)
        throw InsufficientDataError("dark scan needs at least 2 lines, got " +
                                    std::to_string(dark_scan.lines));
    if (dark_scan.lines < 32 && warnings)
        warnings->push_back("dark scan has only " + std::to_string(dark_scan.lines) +
                            " lines; expect residual random noise in the offsets");

    DarkFrame dark;
    dark.offsets = DetectorMap(dark_scan.samples, dark_scan.bands);
    dark.source_lines = dark_scan.lines;
    if (auto it = dark_scan.metadata.find("integration time"); it != dark_scan.metadata.end())
        dark.integration_tag = it->second;
    const double inv = 1.0 / dark_scan.lines;
    for (int b = 0; b < dark_scan.bands; ++b) {
        for (int s = 0; s < dark_scan.samples; ++s) {
            double acc = 0.0;
            for (int y = 0; y < dark_scan.lines; ++y) acc += dark_scan.at(y, s, b);
            dark.offsets.at(s, b) = acc * inv;
        }
    }
    return dark;
}

namespace {
SpectralCube offset_by_dark(const SpectralCube& cube, const DarkFrame& dark, double sign,
                            int threads) {
    require_detector_shape(cube, dark.offsets, "dark frame");
    SpectralCube out = cube;
    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t b = b0; b < b1; ++b)
            for (int y = 0; y < cube.lines; ++y)
                for (int s = 0; s < cube.samples; ++s)
                    out.at(static_cast<int>(y), s, static_cast<int>(b)) =
                        cube.at(static_cast<int>(y), s, static_cast<int>(b)) +
                        sign * dark.offsets.at(s, static_cast<int>(b));
    });
    return out;
}
}  // namespace

SpectralCube subtract_dark(const SpectralCube& cube, const DarkFrame& dark, int threads) {
    SpectralCube out = offset_by_dark(cube, dark, -1.0, threads);
    out.metadata["dark subtracted"] = "true";  // negatives preserved, not clamped
    return out;
}

SpectralCube add_dark(const SpectralCube& cube, const DarkFrame& dark, int threads) {
    SpectralCube out = offset_by_dark(cube, dark, +1.0, threads);
    out.metadata.erase("dark subtracted");
    return out;
}

FlatField build_flat_field(const SpectralCube& uniform_scan, const DarkFrame& dark, int threads) {
    require_detector_shape(uniform_scan, dark.offsets, "dark frame");

    DetectorMap means(uniform_scan.samples, uniform_scan.bands);
    parallel_chunks(uniform_scan.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t b = b0; b < b1; ++b) {
            for (int s = 0; s < uniform_scan.samples; ++s) {
                double acc = 0.0;
                for (int y = 0; y < uniform_scan.lines; ++y)
                    acc += uniform_scan.at(y, s, static_cast<int>(b));
                means.at(s, static_cast<int>(b)) =
                    acc / uniform_scan.lines - dark.offsets.at(s, static_cast<int>(b));
            }
        }
    });

    std::vector<std::pair<int, int>> dead;
    for (int b = 0; b < uniform_scan.bands; ++b)
        for (int s = 0; s < uniform_scan.samples; ++s)
            if (!(means.at(s, b) > 0.0)) dead.emplace_back(s, b);
    if (!dead.empty()) {
        std::ostringstream oss;
        oss << dead.size() << " pixel(s) with non-positive mean in flat-field scan; first at "
            << "(sample " << dead.front().first << ", band " << dead.front().second << ")";
        throw DeadPixelError(oss.str(), std::move(dead));
    }

    FlatField flat;
    flat.gains = DetectorMap(uniform_scan.samples, uniform_scan.bands);
    for (int b = 0; b < uniform_scan.bands; ++b) {
        std::vector<double> band_means(means.v.begin() + static_cast<std::size_t>(b) * means.samples,
                                       means.v.begin() + static_cast<std::size_t>(b + 1) * means.samples);
        const double med = median_of(std::move(band_means));
        for (int s = 0; s < uniform_scan.samples; ++s)
            flat.gains.at(s, b) = means.at(s, b) / med;
    }
    return flat;
}

SpectralCube apply_flat_field(const SpectralCube& cube, const FlatField& flat, int threads) {
    require_detector_shape(cube, flat.gains, "flat field");
    SpectralCube out = cube;
    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t b = b0; b < b1; ++b)
            for (int y = 0; y < cube.lines; ++y)
                for (int s = 0; s < cube.samples; ++s)
                    out.at(y, s, static_cast<int>(b)) /= flat.gains.at(s, static_cast<int>(b));
    });
    out.metadata["flat fielded"] = "true";
    return out;
}

CubeMask saturation_mask(const SpectralCube& cube, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ParameterError("saturation fraction must be in (0, 1]");
    require_raw_counts(cube, "saturation_mask");
    if (!(cube.code_max > 0))
        throw ParameterError("cube has no code_max; cannot derive a saturation threshold");
    const double threshold = fraction * cube.code_max;
    CubeMask mask(cube.samples, cube.lines, cube.bands);
    for (std::size_t i = 0; i < cube.data.size(); ++i)
        mask.v[i] = cube.data[i] >= threshold ? 1 : 0;
    return mask;
}

PanelStats robust_panel_statistic(const SpectralCube& cube, const DarkFrame& dark, const Roi& roi,
                                  PanelStatistic method, int threads) {
    cube.check_roi(roi);
    require_detector_shape(cube, dark.offsets, "dark frame");
    if (method == PanelStatistic::SkewMode && roi.height < 20)
        throw InsufficientDataError("skew_mode needs an ROI of at least 20 lines, got " +
                                    std::to_string(roi.height));

    const double sat_threshold =
        cube.code_max > 0 ? kSaturationExclusionFraction * cube.code_max
                          : std::numeric_limits<double>::infinity();

    PanelStats out;
    out.statistic = DetectorMap(cube.samples, cube.bands, kNoData);
    out.mean = DetectorMap(cube.samples, cube.bands, kNoData);
    out.mean_mode_delta = DetectorMap(cube.samples, cube.bands, 0.0);
    out.saturated = DetectorMask(cube.samples, cube.bands, false);

    const std::int64_t jobs = static_cast<std::int64_t>(cube.bands) * roi.width;
    parallel_chunks(jobs, threads, [&](std::int64_t j0, std::int64_t j1) {
        std::vector<double> column(roi.height);
        for (std::int64_t j = j0; j < j1; ++j) {
            const int b = static_cast<int>(j / roi.width);
            const int s = roi.sample0 + static_cast<int>(j % roi.width);

            bool saturated = false;
            for (int k = 0; k < roi.height; ++k) {
                const double raw = cube.at(roi.line0 + k, s, b);
                if (raw >= sat_threshold) saturated = true;
                column[k] = raw - dark.offsets.at(s, b);
            }
            out.saturated.set(s, b, saturated);

            const double mean =
                std::accumulate(column.begin(), column.end(), 0.0) / column.size();
            out.mean.at(s, b) = mean;

            double stat = mean;
            switch (method) {
                case PanelStatistic::Mean:
                    break;
                case PanelStatistic::Median:
                    stat = median_of(column);
                    break;
                case PanelStatistic::SkewMode: {
                    const SkewNormalFit fit = fit_skew_normal(column);
                    stat = fit.mode;
                    break;
                }
            }
            out.statistic.at(s, b) = stat;
            out.mean_mode_delta.at(s, b) = mean - stat;
        }
    });
    return out;
}

ReferencePanel build_reference_panel(const SpectralCube& panel_scan, const DarkFrame& dark,
                                     const Roi& roi, CertifiedCurve certified,
                                     PanelStatistic method, int threads) {
    require_raw_counts(panel_scan, "build_reference_panel");
    PanelStats stats = robust_panel_statistic(panel_scan, dark, roi, method, threads);
    ReferencePanel panel;
    panel.certified = std::move(certified);
    panel.roi = roi;
    panel.stats = std::move(stats.statistic);
    panel.sat_mask = std::move(stats.saturated);
    // samples the ROI never covered stay unusable
    for (int b = 0; b < panel.stats.bands; ++b)
        for (int s = 0; s < panel.stats.samples; ++s)
            if (is_no_data(panel.stats.at(s, b))) panel.sat_mask.set(s, b, true);
    return panel;
}

SpectralCube single_target_reflectance(const SpectralCube& cube, const DarkFrame& dark,
                                       const ReferencePanel& panel, int threads) {
    require_detector_shape(cube, dark.offsets, "dark frame");
    require_detector_shape(cube, panel.stats, "panel statistics");
    if (panel.roi.sample0 > 0 || panel.roi.sample_end() < cube.samples)
        throw CalibrationError("panel ROI covers samples [" + std::to_string(panel.roi.sample0) +
                               ", " + std::to_string(panel.roi.sample_end()) +
                               ") but the cube needs all " + std::to_string(cube.samples));

    std::vector<int> saturated_bands;
    for (int b = 0; b < cube.bands; ++b) {
        for (int s = 0; s < cube.samples; ++s) {
            if (panel.sat_mask.get(s, b)) {
                saturated_bands.push_back(b);
                break;
            }
        }
    }
    if (!saturated_bands.empty()) {
        std::ostringstream oss;
        oss << "reference panel saturated or unusable in " << saturated_bands.size()
            << " band(s):";
        for (std::size_t i = 0; i < saturated_bands.size() && i < 8; ++i)
            oss << " " << saturated_bands[i] << " (" << cube.wavelengths[saturated_bands[i]]
                << " nm)";
        if (saturated_bands.size() > 8) oss << " ...";
        throw CalibrationError(oss.str(), std::move(saturated_bands));
    }

    const std::vector<double> certified = panel.certified.resample(cube.wavelengths);

    SpectralCube out = cube;
    out.units = Units::ReflectanceFactor;
    out.metadata["calibration"] = "single target";
    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < cube.lines; ++y)
                for (int s = 0; s < cube.samples; ++s)
                    out.at(y, s, b) = (cube.at(y, s, b) - dark.offsets.at(s, b)) /
                                      panel.stats.at(s, b) * certified[b];
        }
    });
    return out;
}

namespace {

struct FitAccumulator {
    // ordinary least squares for DN = gain * R + offset
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    double single_gain = 0;  // DN / R of the last usable panel

    void add(double r, double dn) {
        sx += r;
        sy += dn;
        sxx += r * r;
        sxy += r * dn;
        ++n;
        single_gain = dn / r;
    }

    bool solve(double& gain, double& offset) const {
        const double det = n * sxx - sx * sx;
        if (n < 2 || std::fabs(det) < 1e-12 * std::max(1.0, sxx * n)) return false;
        gain = (n * sxy - sx * sy) / det;
        offset = (sy * sxx - sx * sxy) / det;
        return true;
    }
};

}  // namespace

LinearCalibration fit_multi_target(const std::vector<ReferencePanel>& panels,
                                   const std::vector<double>& cube_wavelengths, int threads) {
    if (panels.size() < 2)
        throw ParameterError("multi-target fit needs at least 2 panels, got " +
                             std::to_string(panels.size()));
    const int samples = panels.front().stats.samples;
    const int bands = static_cast<int>(cube_wavelengths.size());
    for (const auto& p : panels)
        if (p.stats.samples != samples || p.stats.bands != bands)
            throw DimensionError("panels disagree on detector geometry");

    std::vector<std::vector<double>> certified(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i)
        certified[i] = panels[i].certified.resample(cube_wavelengths);

    LinearCalibration cal;
    cal.gain = DetectorMap(samples, bands, kNoData);
    cal.offset = DetectorMap(samples, bands, 0.0);
    cal.n_targets_used = DetectorCountMap(samples, bands, 0);

    std::vector<std::string> band_warnings(bands);
    parallel_chunks(bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            int fallback_count = 0;
            for (int s = 0; s < samples; ++s) {
                FitAccumulator acc;
                for (std::size_t p = 0; p < panels.size(); ++p) {
                    if (panels[p].sat_mask.get(s, b)) continue;
                    const double stat = panels[p].stats.at(s, b);
                    if (is_no_data(stat)) continue;
                    acc.add(certified[p][b], stat);
                }
                double gain, offset;
                if (acc.solve(gain, offset)) {
                    cal.gain.at(s, b) = gain;
                    cal.offset.at(s, b) = offset;
                    cal.n_targets_used.at(s, b) = acc.n;
                } else if (acc.n >= 1) {
                    cal.gain.at(s, b) = acc.single_gain;
                    cal.offset.at(s, b) = 0.0;
                    cal.n_targets_used.at(s, b) = acc.n;
                    ++fallback_count;
                } else {
                    ++fallback_count;
                }
            }
            if (fallback_count > 0) {
                std::ostringstream oss;
                oss << "band " << b << " (" << cube_wavelengths[b] << " nm): " << fallback_count
                    << " sample(s) with fewer than 2 usable panels; single-target fallback";
                band_warnings[b] = oss.str();
            }
        }
    });
    for (auto& w : band_warnings)
        if (!w.empty()) cal.warnings.push_back(std::move(w));
    return cal;
}

LinearCalibration fit_multi_target_global(const std::vector<ReferencePanel>& panels,
                                          const std::vector<double>& cube_wavelengths) {
    if (panels.size() < 2)
        throw ParameterError("multi-target fit needs at least 2 panels, got " +
                             std::to_string(panels.size()));
    const int samples = panels.front().stats.samples;
    const int bands = static_cast<int>(cube_wavelengths.size());

    std::vector<std::vector<double>> certified(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i)
        certified[i] = panels[i].certified.resample(cube_wavelengths);

    LinearCalibration cal;
    cal.gain = DetectorMap(samples, bands, kNoData);
    cal.offset = DetectorMap(samples, bands, 0.0);
    cal.n_targets_used = DetectorCountMap(samples, bands, 0);

    for (int b = 0; b < bands; ++b) {
        FitAccumulator acc;
        for (std::size_t p = 0; p < panels.size(); ++p) {
            // pool panel pixels: average usable columns first
            double sum = 0;
            int n = 0;
            for (int s = 0; s < samples; ++s) {
                if (panels[p].sat_mask.get(s, b)) continue;
                const double stat = panels[p].stats.at(s, b);
                if (is_no_data(stat)) continue;
                sum += stat;
                ++n;
            }
            if (n > 0) acc.add(certified[p][b], sum / n);
        }
        double gain, offset;
        const bool ok = acc.solve(gain, offset);
        if (!ok && acc.n >= 1) {
            gain = acc.single_gain;
            offset = 0.0;
        } else if (!ok) {
            cal.warnings.push_back("band " + std::to_string(b) + ": no usable panels");
            continue;
        }
        for (int s = 0; s < samples; ++s) {
            cal.gain.at(s, b) = gain;
            cal.offset.at(s, b) = offset;
            cal.n_targets_used.at(s, b) = acc.n;
        }
    }
    return cal;
}

SpectralCube apply_linear_calibration(const SpectralCube& cube, const DarkFrame& dark,
                                      const LinearCalibration& cal, int threads) {
    require_detector_shape(cube, dark.offsets, "dark frame");
    require_detector_shape(cube, cal.gain, "linear calibration");
    for (int b = 0; b < cube.bands; ++b)
        for (int s = 0; s < cube.samples; ++s) {
            const double g = cal.gain.at(s, b);
            if (is_no_data(g) || !(g > 0.0))
                throw CalibrationError("non-positive calibration gain at sample " +
                                           std::to_string(s) + ", band " + std::to_string(b),
                                       {b});
        }

    SpectralCube out = cube;
    out.units = Units::ReflectanceFactor;
    out.metadata["calibration"] = "multi target linear";
    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < cube.lines; ++y)
                for (int s = 0; s < cube.samples; ++s)
                    out.at(y, s, b) = (cube.at(y, s, b) - dark.offsets.at(s, b) -
                                       cal.offset.at(s, b)) /
                                      cal.gain.at(s, b);
        }
    });
    return out;
}

SpectralCube calibrate_full_fov_panel(const SpectralCube& cube, const DarkFrame& dark,
                                      const SpectralCube& panel_scan,
                                      const CertifiedCurve& certified, PanelStatistic method,
                                      int threads) {
    const Roi roi{0, 0, panel_scan.samples, panel_scan.lines};
    const ReferencePanel panel =
        build_reference_panel(panel_scan, dark, roi, certified, method, threads);
    return single_target_reflectance(cube, dark, panel, threads);
}

SpectralCube clamp_reflectance(const SpectralCube& cube, double lo, double hi) {
    SpectralCube out = cube;
    for (double& d : out.data)
        if (!is_no_data(d)) d = std::clamp(d, lo, hi);
    out.metadata["clamped"] = "true";
    return out;
}

}  // namespace hscal
