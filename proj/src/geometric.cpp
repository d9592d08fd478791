#include "hscal/geometric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "hscal/parallel.hpp"

namespace hscal {

double SensorModel::extent() const {
    return std::accumulate(effective_size.begin(), effective_size.end(), 0.0);
}

std::vector<double> SensorModel::pixel_centers() const {
    std::vector<double> centers(effective_size.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < effective_size.size(); ++i) {
        centers[i] = acc + 0.5 * effective_size[i];
        acc += effective_size[i];
    }
    return centers;
}

void SensorModel::validate() const {
    if (effective_size.size() < 2) throw SchemaError("sensor model needs at least 2 samples");
    for (std::size_t i = 0; i < effective_size.size(); ++i)
        if (!(effective_size[i] > 0.0) || !std::isfinite(effective_size[i]))
            throw FormatError("sensor model has non-positive size at sample " +
                              std::to_string(i));
    if (!(reference_pitch > 0.0)) throw FormatError("reference pitch must be positive");
}

SensorModel parse_sensor_model(const std::string& csv_text) {
    std::istringstream iss(csv_text);
    std::string line;
    bool header_seen = false;
    SensorModel model;
    int expected_index = 0;
    int lineno = 0;
    while (std::getline(iss, line)) {
        ++lineno;
        std::string t = line;
        t.erase(std::remove(t.begin(), t.end(), '\r'), t.end());
        if (t.find_first_not_of(" \t") == std::string::npos) continue;
        if (!header_seen) {
            std::string normalized = t;
            normalized.erase(std::remove_if(normalized.begin(), normalized.end(),
                                            [](unsigned char c) { return std::isspace(c); }),
                             normalized.end());
            if (normalized != "sample_index,effective_size")
                throw FormatError("expected header 'sample_index,effective_size', got '" + t +
                                  "'");
            header_seen = true;
            continue;
        }
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos)
            throw FormatError("line " + std::to_string(lineno) + ": expected two columns");
        int index;
        double size;
        try {
            index = std::stoi(t.substr(0, comma));
            size = std::stod(t.substr(comma + 1));
        } catch (const std::exception&) {
            throw FormatError("line " + std::to_string(lineno) + ": bad number in '" + t + "'");
        }
        if (index != expected_index)
            throw FormatError("sample indices must be contiguous from 0; expected " +
                              std::to_string(expected_index) + ", got " + std::to_string(index));
        if (!(size > 0.0))
            throw FormatError("line " + std::to_string(lineno) +
                              ": effective size must be positive");
        model.effective_size.push_back(size);
        ++expected_index;
    }
    if (!header_seen) throw FormatError("empty sensor-model CSV");
    model.validate();
    return model;
}

std::string sensor_model_to_csv(const SensorModel& model) {
    std::ostringstream oss;
    oss << "sample_index,effective_size\n";
    for (std::size_t i = 0; i < model.effective_size.size(); ++i)
        oss << i << "," << std::setprecision(12) << model.effective_size[i] << "\n";
    return oss.str();
}

namespace {

// linear interpolation of (xs, ys) at x; xs strictly increasing; clamped ends
double interp_clamped(const std::vector<double>& xs, const double* ys, double x) {
    if (x <= xs.front()) return ys[0];
    if (x >= xs.back()) return ys[xs.size() - 1];
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

SpectralCube resample_across_track(const SpectralCube& cube, const SensorModel& model,
                                   int out_samples, int threads) {
    model.validate();
    if (model.size() != cube.samples)
        throw DimensionError("sensor model covers " + std::to_string(model.size()) +
                             " samples but cube has " + std::to_string(cube.samples));
    if (out_samples < 2) throw ParameterError("out_samples must be >= 2");

    const std::vector<double> centers = model.pixel_centers();
    const double extent = model.extent();
    const double out_pitch = extent / out_samples;

    SpectralCube out(out_samples, cube.lines, cube.bands, cube.wavelengths);
    out.units = cube.units;
    out.code_max = cube.code_max;
    out.metadata = cube.metadata;
    out.metadata["geometric"] = "across-track resampled";

    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        std::vector<double> row(cube.samples);
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < cube.lines; ++y) {
                for (int s = 0; s < cube.samples; ++s) row[s] = cube.at(y, s, b);
                for (int o = 0; o < out_samples; ++o) {
                    const double x = (o + 0.5) * out_pitch;
                    out.at(y, o, b) = interp_clamped(centers, row.data(), x);
                }
            }
        }
    });
    return out;
}

ScaleEstimate estimate_scale_from_target(double known_length_mm, double measured_pixels,
                                         double nominal_pixel_pitch_mm,
                                         const std::string& source) {
    if (!(known_length_mm > 0.0) || !(measured_pixels > 0.0) || !(nominal_pixel_pitch_mm > 0.0))
        throw ParameterError("scale estimation inputs must all be positive");
    ScaleEstimate est;
    est.factor = known_length_mm / (measured_pixels * nominal_pixel_pitch_mm);
    est.source = source;
    if (est.factor <= kScaleSanityLo || est.factor >= kScaleSanityHi) {
        std::ostringstream oss;
        oss << "scale factor " << est.factor << " outside sanity window (" << kScaleSanityLo
            << ", " << kScaleSanityHi << "); check target measurement";
        throw SuspiciousScaleError(oss.str());
    }
    return est;
}

SpectralCube rescale_aspect(const SpectralCube& cube, double factor, int threads) {
    if (factor < kScaleSanityLo || factor > kScaleSanityHi)
        throw ParameterError("aspect factor " + std::to_string(factor) +
                             " outside sanity window");
    const int out_lines = static_cast<int>(std::lround(cube.lines * factor));
    if (out_lines < 2) throw ParameterError("rescaled cube would have fewer than 2 lines");

    SpectralCube out(cube.samples, out_lines, cube.bands, cube.wavelengths);
    out.units = cube.units;
    out.code_max = cube.code_max;
    out.metadata = cube.metadata;
    out.metadata["geometric aspect"] = std::to_string(factor);

    // pixel-center mapping: output line j samples input position (j+0.5)/f - 0.5
    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int j = 0; j < out_lines; ++j) {
                const double y = (j + 0.5) / factor - 0.5;
                const int y0 = static_cast<int>(std::floor(y));
                const double t = y - y0;
                const int lo = std::clamp(y0, 0, cube.lines - 1);
                const int hi = std::clamp(y0 + 1, 0, cube.lines - 1);
                for (int s = 0; s < cube.samples; ++s)
                    out.at(j, s, b) = (1.0 - t) * cube.at(lo, s, b) + t * cube.at(hi, s, b);
            }
        }
    });
    return out;
}

}  // namespace hscal
