#include "hscal/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hscal/parallel.hpp"

namespace hscal {

std::string SnrReport::to_csv() const {
    std::ostringstream oss;
    oss << "wavelength_nm,snr\n";
    for (std::size_t i = 0; i < snr.size(); ++i)
        oss << wavelengths[i] << "," << snr[i] << "\n";
    return oss.str();
}

SpectralCube frame_average(const std::vector<SpectralCube>& frames, int threads) {
    if (frames.empty()) throw ParameterError("frame_average needs at least one frame");
    const SpectralCube& first = frames.front();
    for (const auto& f : frames) {
        if (!f.same_shape(first) || f.wavelengths != first.wavelengths)
            throw DimensionError("frames disagree on shape or wavelengths");
    }
    if (frames.size() == 1) return first;

    SpectralCube out = first;
    const double inv = 1.0 / frames.size();
    parallel_chunks(static_cast<std::int64_t>(out.data.size()), threads,
                    [&](std::int64_t i0, std::int64_t i1) {
                        for (std::int64_t i = i0; i < i1; ++i) {
                            double acc = 0.0;
                            for (const auto& f : frames) acc += f.data[i];
                            out.data[i] = acc * inv;
                        }
                    });
    return out;
}

SnrReport estimate_snr(const SpectralCube& cube, const Roi& roi) {
    cube.check_roi(roi);
    SnrReport report;
    report.roi = roi;
    report.wavelengths = cube.wavelengths;
    report.snr.resize(cube.bands);
    const double n = static_cast<double>(roi.width) * roi.height;
    for (int b = 0; b < cube.bands; ++b) {
        double mean = 0.0;
        for (int y = roi.line0; y < roi.line_end(); ++y)
            for (int s = roi.sample0; s < roi.sample_end(); ++s) mean += cube.at(y, s, b);
        mean /= n;
        double var = 0.0;
        for (int y = roi.line0; y < roi.line_end(); ++y)
            for (int s = roi.sample0; s < roi.sample_end(); ++s) {
                const double d = cube.at(y, s, b) - mean;
                var += d * d;
            }
        var /= n;
        if (var > 0.0) {
            report.snr[b] = mean / std::sqrt(var);
        } else {
            report.snr[b] = std::numeric_limits<double>::infinity();
            report.warnings.push_back("band " + std::to_string(b) +
                                      ": zero variance in ROI, SNR reported as infinite");
        }
    }
    return report;
}

namespace {

// Solves the small symmetric system A x = b in place (Gaussian elimination
// with partial pivoting); A is (degree+1)^2.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (a[col][col] == 0.0) throw DegenerateError("singular normal equations");
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return x;
}

}  // namespace

std::vector<double> savitzky_golay_weights(int window, int degree) {
    if (window < 3 || window % 2 == 0)
        throw ParameterError("smoothing window must be odd and >= 3, got " +
                             std::to_string(window));
    if (degree < 0 || degree >= window)
        throw ParameterError("polynomial degree must satisfy 0 <= degree < window");

    const int half = window / 2;
    const int terms = degree + 1;
    // normal equations for fitting x^0..x^degree over offsets -half..half;
    // the smoothed center value is the fitted constant term, a linear
    // combination of the window samples.
    std::vector<std::vector<double>> ata(terms, std::vector<double>(terms, 0.0));
    for (int r = 0; r < terms; ++r)
        for (int c = 0; c < terms; ++c)
            for (int k = -half; k <= half; ++k)
                ata[r][c] += std::pow(static_cast<double>(k), r + c);

    std::vector<double> weights(window);
    for (int k = -half; k <= half; ++k) {
        std::vector<double> atv(terms);
        for (int r = 0; r < terms; ++r) atv[r] = std::pow(static_cast<double>(k), r);
        // weight of sample k = first row of (A^T A)^-1 * A^T, computed column-wise
        std::vector<double> coeffs = solve_dense(ata, atv);
        weights[k + half] = coeffs[0];
    }
    return weights;
}

namespace {
// mirror padding index: reflects without repeating the edge element
int mirror_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}
}  // namespace

namespace {

// Evaluation weights for the least-squares polynomial over window positions
// 0..window-1, evaluated at each position p: row p of V (A^T A)^-1 A^T.
// Band edges use these rows directly (fit the end window, evaluate at the
// edge position), which keeps polynomial spectra exactly invariant; the
// interior uses the centered row.
std::vector<std::vector<double>> polynomial_eval_weights(int window, int degree) {
    const int terms = degree + 1;
    std::vector<std::vector<double>> ata(terms, std::vector<double>(terms, 0.0));
    for (int r = 0; r < terms; ++r)
        for (int c = 0; c < terms; ++c)
            for (int k = 0; k < window; ++k)
                ata[r][c] += std::pow(static_cast<double>(k), r + c);

    // columns of (A^T A)^-1 A^T
    std::vector<std::vector<double>> coeff_cols(window);
    for (int k = 0; k < window; ++k) {
        std::vector<double> atv(terms);
        for (int r = 0; r < terms; ++r) atv[r] = std::pow(static_cast<double>(k), r);
        coeff_cols[k] = solve_dense(ata, atv);
    }

    std::vector<std::vector<double>> eval(window, std::vector<double>(window, 0.0));
    for (int p = 0; p < window; ++p) {
        double pw = 1.0;
        std::vector<double> powers(terms);
        for (int j = 0; j < terms; ++j) {
            powers[j] = pw;
            pw *= p;
        }
        for (int k = 0; k < window; ++k)
            for (int j = 0; j < terms; ++j) eval[p][k] += powers[j] * coeff_cols[k][j];
    }
    return eval;
}

}  // namespace

SpectralCube denoise_spectral(const SpectralCube& cube, int window, int degree, int threads) {
    if (window > cube.bands)
        throw ParameterError("smoothing window " + std::to_string(window) +
                             " exceeds band count " + std::to_string(cube.bands));
    if (window < 3 || window % 2 == 0)
        throw ParameterError("smoothing window must be odd and >= 3, got " +
                             std::to_string(window));
    if (degree < 0 || degree >= window)
        throw ParameterError("polynomial degree must satisfy 0 <= degree < window");

    const std::vector<std::vector<double>> eval = polynomial_eval_weights(window, degree);
    const int half = window / 2;
    const int tail_start = cube.bands - window;

    SpectralCube out = cube;
    const std::int64_t pixels = static_cast<std::int64_t>(cube.lines) * cube.samples;
    parallel_chunks(pixels, threads, [&](std::int64_t p0, std::int64_t p1) {
        std::vector<double> spectrum(cube.bands);
        for (std::int64_t p = p0; p < p1; ++p) {
            const int y = static_cast<int>(p / cube.samples);
            const int s = static_cast<int>(p % cube.samples);
            for (int b = 0; b < cube.bands; ++b) spectrum[b] = cube.at(y, s, b);
            for (int b = 0; b < cube.bands; ++b) {
                int base, row;
                if (b < half) {
                    base = 0;
                    row = b;
                } else if (b >= cube.bands - half) {
                    base = tail_start;
                    row = b - tail_start;
                } else {
                    base = b - half;
                    row = half;
                }
                double acc = 0.0;
                for (int k = 0; k < window; ++k) acc += eval[row][k] * spectrum[base + k];
                out.at(y, s, b) = acc;
            }
        }
    });
    out.metadata["denoise spectral"] =
        "window " + std::to_string(window) + " degree " + std::to_string(degree);
    return out;
}

SpectralCube denoise_spatial_median(const SpectralCube& cube, int radius, int threads) {
    if (radius < 1) throw ParameterError("median radius must be >= 1");
    if (radius >= std::min(cube.samples, cube.lines))
        throw ParameterError("median radius " + std::to_string(radius) +
                             " too large for a " + std::to_string(cube.samples) + "x" +
                             std::to_string(cube.lines) + " band image");

    SpectralCube out = cube;
    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        const int side = 2 * radius + 1;
        std::vector<double> windowed(static_cast<std::size_t>(side) * side);
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < cube.lines; ++y) {
                for (int s = 0; s < cube.samples; ++s) {
                    int k = 0;
                    for (int dy = -radius; dy <= radius; ++dy)
                        for (int ds = -radius; ds <= radius; ++ds)
                            windowed[k++] = cube.at(mirror_index(y + dy, cube.lines),
                                                    mirror_index(s + ds, cube.samples), b);
                    auto mid = windowed.begin() + windowed.size() / 2;
                    std::nth_element(windowed.begin(), mid, windowed.end());
                    out.at(y, s, b) = *mid;
                }
            }
        }
    });
    out.metadata["denoise spatial"] = "median radius " + std::to_string(radius);
    return out;
}

}  // namespace hscal
