#include "hscal/registration.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>

#include "hscal/parallel.hpp"

namespace hscal {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct ImageStats {
    double mean;
    double stddev;
};

ImageStats image_stats(const Image2D& img) {
    double mean = 0.0;
    for (double v : img.v) mean += v;
    mean /= img.v.size();
    double var = 0.0;
    for (double v : img.v) {
        const double d = v - mean;
        var += d * d;
    }
    var /= img.v.size();
    return {mean, std::sqrt(var)};
}

double parabolic_offset(double ym, double y0, double yp) {
    const double denom = ym - 2.0 * y0 + yp;
    if (!(std::fabs(denom) > 1e-300)) return 0.0;
    const double delta = 0.5 * (ym - yp) / denom;
    return std::clamp(delta, -0.5, 0.5);
}

}  // namespace

Translation2D estimate_translation(const Image2D& a, const Image2D& b,
                                   const TranslationOptions& opts) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError("translation estimation needs equal image shapes");
    if (a.width < 2 || a.height < 2)
        throw DimensionError("images too small for translation estimation");

    const ImageStats sa = image_stats(a);
    const ImageStats sb = image_stats(b);
    if (sa.stddev <= 1e-12 * (std::fabs(sa.mean) + 1.0) ||
        sb.stddev <= 1e-12 * (std::fabs(sb.mean) + 1.0))
        throw NoSignalError("constant image: no structure to register");

    const int w = a.width, h = a.height;
    const int spec_w = w / 2 + 1;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    std::vector<double> ra(n), rb(n);
    for (std::size_t i = 0; i < n; ++i) {
        ra[i] = a.v[i] - sa.mean;
        rb[i] = b.v[i] - sb.mean;
    }
    if (opts.hann_window) {
        std::vector<double> wx(w), wy(h);
        for (int x = 0; x < w; ++x) wx[x] = 0.5 - 0.5 * std::cos(2.0 * M_PI * x / (w - 1));
        for (int y = 0; y < h; ++y) wy[y] = 0.5 - 0.5 * std::cos(2.0 * M_PI * y / (h - 1));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                ra[i] *= wx[x] * wy[y];
                rb[i] *= wx[x] * wy[y];
            }
    }

    std::vector<std::complex<double>> fa(static_cast<std::size_t>(h) * spec_w);
    std::vector<std::complex<double>> fb(fa.size());
    std::vector<double> corr(n);
    double weight_sum = 0.0;

    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_plan pa = fftw_plan_dft_r2c_2d(h, w, ra.data(),
                                            reinterpret_cast<fftw_complex*>(fa.data()),
                                            FFTW_ESTIMATE);
        fftw_plan pb = fftw_plan_dft_r2c_2d(h, w, rb.data(),
                                            reinterpret_cast<fftw_complex*>(fb.data()),
                                            FFTW_ESTIMATE);
        fftw_execute(pa);
        fftw_execute(pb);
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pb);

        // normalized cross-power spectrum: conj(Fa) * Fb / |.|, with a radial
        // Gaussian low-pass weight so the correlation peak is smooth enough
        // for an unbiased parabolic sub-pixel fit. Bins whose cross-power is
        // negligible against the strongest bin carry only rounding noise and
        // are dropped before normalization.
        const double cutoff = std::clamp(opts.spectral_cutoff, 0.01, 1.0);
        double max_mag = 0.0;
        for (std::size_t i = 0; i < fa.size(); ++i)
            max_mag = std::max(max_mag, std::abs(std::conj(fa[i]) * fb[i]));
        const double floor = 1e-4 * max_mag;
        for (int ky = 0; ky < h; ++ky) {
            const double fy = (ky <= h / 2 ? ky : ky - h) / (0.5 * h);
            for (int kx = 0; kx < spec_w; ++kx) {
                const double fx = kx / (0.5 * w);
                const double rho2 = (fx * fx + fy * fy) / (cutoff * cutoff);
                const double weight = std::exp(-rho2);
                const std::size_t i = static_cast<std::size_t>(ky) * spec_w + kx;
                const std::complex<double> c = std::conj(fa[i]) * fb[i];
                const double mag = std::abs(c);
                if (mag <= floor) {
                    fa[i] = std::complex<double>(0.0, 0.0);
                    continue;
                }
                // hermitian half-spectrum: interior columns count twice
                weight_sum += weight * ((kx == 0 || kx == w - kx) ? 1.0 : 2.0);
                fa[i] = c / mag * weight;
            }
        }
        if (weight_sum <= 0.0) throw NoSignalError("cross-power spectrum is empty");

        fftw_plan pc = fftw_plan_dft_c2r_2d(h, w, reinterpret_cast<fftw_complex*>(fa.data()),
                                            corr.data(), FFTW_ESTIMATE);
        fftw_execute(pc);
        fftw_destroy_plan(pc);
    }

    // a perfect cyclic shift now peaks at weight_sum; normalize against it
    const double scale = 1.0 / weight_sum;
    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (corr[i] > corr[peak]) peak = i;
    const int py = static_cast<int>(peak) / w;
    const int px = static_cast<int>(peak) % w;

    auto wrapped = [&](int x, int y) {
        const int xx = ((x % w) + w) % w;
        const int yy = ((y % h) + h) % h;
        return corr[static_cast<std::size_t>(yy) * w + xx] * scale;
    };

    const double dx_frac = parabolic_offset(wrapped(px - 1, py), wrapped(px, py), wrapped(px + 1, py));
    const double dy_frac = parabolic_offset(wrapped(px, py - 1), wrapped(px, py), wrapped(px, py + 1));

    Translation2D t;
    t.dx = (px > w / 2 ? px - w : px) + dx_frac;
    t.dy = (py > h / 2 ? py - h : py) + dy_frac;
    t.confidence = std::clamp(wrapped(px, py), 0.0, 1.0);
    return t;
}

SpectralCube resample_to_reference(const SpectralCube& cube, double scale_x, double scale_y,
                                   const Translation2D& offset, int ref_samples, int ref_lines,
                                   int threads) {
    if (!(scale_x > 0.0) || !(scale_y > 0.0))
        throw ParameterError("resampling scale must be positive");
    if (ref_samples < 1 || ref_lines < 1)
        throw ParameterError("reference shape must be positive");

    SpectralCube out(ref_samples, ref_lines, cube.bands, cube.wavelengths, kNoData);
    out.units = cube.units;
    out.code_max = cube.code_max;
    out.metadata = cube.metadata;

    parallel_chunks(cube.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < ref_lines; ++y) {
                const double ys = (y + 0.5 - offset.dy) / scale_y - 0.5;
                if (ys < 0.0 || ys > cube.lines - 1.0) continue;
                const int y0 = std::clamp(static_cast<int>(ys), 0, std::max(cube.lines - 2, 0));
                const double ty = ys - y0;
                for (int x = 0; x < ref_samples; ++x) {
                    const double xs = (x + 0.5 - offset.dx) / scale_x - 0.5;
                    if (xs < 0.0 || xs > cube.samples - 1.0) continue;
                    const int x0 =
                        std::clamp(static_cast<int>(xs), 0, std::max(cube.samples - 2, 0));
                    const double tx = xs - x0;
                    const double v00 = cube.at(y0, x0, b);
                    const double v01 = cube.at(y0, std::min(x0 + 1, cube.samples - 1), b);
                    const double v10 = cube.at(std::min(y0 + 1, cube.lines - 1), x0, b);
                    const double v11 = cube.at(std::min(y0 + 1, cube.lines - 1),
                                               std::min(x0 + 1, cube.samples - 1), b);
                    if (is_no_data(v00) || is_no_data(v01) || is_no_data(v10) || is_no_data(v11))
                        continue;
                    out.at(y, x, b) = (1 - ty) * ((1 - tx) * v00 + tx * v01) +
                                      ty * ((1 - tx) * v10 + tx * v11);
                }
            }
        }
    });
    return out;
}

namespace {

Image2D central_valid_crop(const Image2D& img, int margin) {
    const int x0 = margin, y0 = margin;
    const int w = img.width - 2 * margin;
    const int h = img.height - 2 * margin;
    if (w < 8 || h < 8) throw DimensionError("images too small for registration crop");
    Image2D out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
    return out;
}

// replace any no-data with the image mean so the FFT sees finite values
void fill_no_data(Image2D& img) {
    double mean = 0.0;
    int n = 0;
    for (double v : img.v)
        if (!is_no_data(v)) {
            mean += v;
            ++n;
        }
    mean = n > 0 ? mean / n : 0.0;
    for (double& v : img.v)
        if (is_no_data(v)) v = mean;
}

Image2D band_of(const SpectralCube& cube, int band) { return cube.band_image(band); }

}  // namespace

CoregisterResult coregister(const SpectralCube& reference, const SpectralCube& moving,
                            const CoregisterOptions& opts) {
    reference.validate();
    moving.validate();

    int ref_tie = 0, mov_tie = 0;
    if (opts.tie_bands) {
        ref_tie = opts.tie_bands->first;
        mov_tie = opts.tie_bands->second;
        if (ref_tie < 0 || ref_tie >= reference.bands || mov_tie < 0 || mov_tie >= moving.bands)
            throw ParameterError("tie band index out of range");
    } else {
        // require overlapping or abutting wavelength ranges
        const double ref_lo = reference.wavelengths.front(), ref_hi = reference.wavelengths.back();
        const double mov_lo = moving.wavelengths.front(), mov_hi = moving.wavelengths.back();
        const double gap = std::max(mov_lo - ref_hi, ref_lo - mov_hi);
        auto median_spacing = [](const std::vector<double>& wl) {
            if (wl.size() < 2) return 1.0;
            std::vector<double> d(wl.size() - 1);
            for (std::size_t i = 1; i < wl.size(); ++i) d[i - 1] = wl[i] - wl[i - 1];
            std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
            return d[d.size() / 2];
        };
        const double abut_tolerance =
            3.0 * std::max(median_spacing(reference.wavelengths), median_spacing(moving.wavelengths));
        if (gap > abut_tolerance)
            throw CoregistrationError(
                "wavelength ranges neither overlap nor abut (gap " + std::to_string(gap) +
                " nm) and no tie band was provided");
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < reference.bands; ++i)
            for (int j = 0; j < moving.bands; ++j) {
                const double d = std::fabs(reference.wavelengths[i] - moving.wavelengths[j]);
                if (d < best) {
                    best = d;
                    ref_tie = i;
                    mov_tie = j;
                }
            }
    }

    const Image2D ref_band = band_of(reference, ref_tie);
    const double scale0 =
        opts.scale ? *opts.scale
                   : static_cast<double>(reference.samples) / static_cast<double>(moving.samples);

    SpectralCube mov_tie_cube(moving.samples, moving.lines, 1, {moving.wavelengths[mov_tie]});
    const double* src = moving.band_plane(mov_tie);
    std::copy(src, src + moving.plane_size(), mov_tie_cube.data.begin());

    // confidence-maximizing scale search (skipped when the pitch ratio is given)
    const int margin =
        std::max(4, static_cast<int>(0.05 * std::min(reference.samples, reference.lines)));
    const Image2D ref_crop = central_valid_crop(ref_band, margin);

    auto probe = [&](double s, double cutoff,
                     const Translation2D& offset) -> std::optional<Translation2D> {
        SpectralCube res = resample_to_reference(mov_tie_cube, s, s, offset, reference.samples,
                                                 reference.lines, opts.threads);
        Image2D img(reference.samples, reference.lines);
        const double* rp = res.band_plane(0);
        std::copy(rp, rp + res.plane_size(), img.v.begin());
        fill_no_data(img);
        TranslationOptions topts;
        topts.spectral_cutoff = cutoff;
        try {
            return estimate_translation(ref_crop, central_valid_crop(img, margin), topts);
        } catch (const NoSignalError&) {
            return std::nullopt;
        }
    };

    // Joint scale and translation refinement. The displacement a wrong scale
    // produces grows linearly across the field, so translations measured in
    // opposite half-windows give the scale error directly:
    //   d(X) = (s - s_true)/s * (X + 0.5) - t
    // Grid searches over correlation confidence cannot see errors this small
    // (the peak value is nearly flat in scale); the half-window solve is.
    auto measure_halves = [&](const Image2D& res_img) {
        struct HalfShift {
            double center;
            Translation2D t;
            bool ok;
        };
        const int W = ref_crop.width, H = ref_crop.height;
        auto sub = [&](const Image2D& src, int x0, int y0, int w2, int h2) {
            Image2D out(w2, h2);
            for (int y = 0; y < h2; ++y)
                for (int x = 0; x < w2; ++x) out.at(x, y) = src.at(x0 + x, y0 + y);
            return out;
        };
        const double matched = std::min(0.35, 0.5 / std::max(scale0, 1.0));
        std::vector<HalfShift> halves(4);
        const int boxes[4][4] = {{0, 0, W / 2, H},          // left
                                 {W - W / 2, 0, W / 2, H},  // right
                                 {0, 0, W, H / 2},          // top
                                 {0, H - H / 2, W, H / 2}}; // bottom
        for (int k = 0; k < 4; ++k) {
            const auto* b = boxes[k];
            halves[k].center = (k < 2) ? margin + b[0] + 0.5 * b[2] : margin + b[1] + 0.5 * b[3];
            try {
                halves[k].t = estimate_translation(sub(ref_crop, b[0], b[1], b[2], b[3]),
                                                   sub(res_img, b[0], b[1], b[2], b[3]),
                                                   TranslationOptions{matched, true});
                halves[k].ok = true;
            } catch (const NoSignalError&) {
                halves[k].ok = false;
            }
        }
        return halves;
    };

    double best_scale = scale0;
    Translation2D best_t;
    double best_conf = -1.0;
    const int scale_iterations = opts.scale ? 0 : 3;
    for (int iter = 0; iter <= scale_iterations; ++iter) {
        const double matched_cutoff = std::min(0.35, 0.5 / std::max(best_scale, 1.0));
        // translation at the current scale, re-measured near alignment where
        // windowing bias vanishes
        for (int sub_iter = 0; sub_iter < 3; ++sub_iter) {
            Translation2D align;
            align.dx = -best_t.dx;
            align.dy = -best_t.dy;
            const auto r = probe(best_scale, matched_cutoff, align);
            if (!r) break;
            best_t.dx += r->dx;
            best_t.dy += r->dy;
            best_conf = r->confidence;
            if (std::fabs(r->dx) < 0.01 && std::fabs(r->dy) < 0.01) break;
        }
        if (best_conf < 0.0) throw NoSignalError("no usable structure in tie bands");
        if (iter == scale_iterations) break;

        // scale correction from the aligned residual field
        Translation2D align;
        align.dx = -best_t.dx;
        align.dy = -best_t.dy;
        SpectralCube res = resample_to_reference(mov_tie_cube, best_scale, best_scale, align,
                                                 reference.samples, reference.lines, opts.threads);
        Image2D img(reference.samples, reference.lines);
        const double* rp = res.band_plane(0);
        std::copy(rp, rp + res.plane_size(), img.v.begin());
        fill_no_data(img);
        const Image2D res_crop = central_valid_crop(img, margin);
        const auto halves = measure_halves(res_crop);
        double slope_sum = 0.0;
        int slope_n = 0;
        if (halves[0].ok && halves[1].ok) {
            slope_sum += (halves[1].t.dx - halves[0].t.dx) / (halves[1].center - halves[0].center);
            ++slope_n;
        }
        if (halves[2].ok && halves[3].ok) {
            slope_sum += (halves[3].t.dy - halves[2].t.dy) / (halves[3].center - halves[2].center);
            ++slope_n;
        }
        if (slope_n == 0) break;
        const double slope = slope_sum / slope_n;  // (s - s_true) / s
        if (std::fabs(slope) < 1e-7) break;
        best_scale *= 1.0 - slope;
    }
    best_t.confidence = best_conf;

    if (best_conf < opts.min_confidence)
        throw LowConfidenceError("registration confidence " + std::to_string(best_conf) +
                                 " below threshold " + std::to_string(opts.min_confidence));

    // moving content sits at +best_t relative to the reference; undo it
    Translation2D align;
    align.dx = -best_t.dx;
    align.dy = -best_t.dy;
    align.confidence = best_conf;
    SpectralCube aligned = resample_to_reference(moving, best_scale, best_scale, align,
                                                 reference.samples, reference.lines, opts.threads);

    // band merge: reference below the overlap midpoint, moving above
    const double overlap_lo = std::max(reference.wavelengths.front(), moving.wavelengths.front());
    const double overlap_hi = std::min(reference.wavelengths.back(), moving.wavelengths.back());
    const double mid = overlap_lo <= overlap_hi
                           ? 0.5 * (overlap_lo + overlap_hi)
                           : 0.5 * (reference.wavelengths.back() + moving.wavelengths.front());

    std::vector<int> ref_keep, mov_keep;
    for (int i = 0; i < reference.bands; ++i)
        if (reference.wavelengths[i] < mid) ref_keep.push_back(i);
    for (int j = 0; j < moving.bands; ++j)
        if (moving.wavelengths[j] >= mid) mov_keep.push_back(j);

    std::vector<double> merged_wl;
    for (int i : ref_keep) merged_wl.push_back(reference.wavelengths[i]);
    for (int j : mov_keep) merged_wl.push_back(moving.wavelengths[j]);

    SpectralCube merged(reference.samples, reference.lines,
                        static_cast<int>(merged_wl.size()), merged_wl);
    merged.units = reference.units;
    merged.code_max = reference.code_max;
    merged.metadata = reference.metadata;
    merged.metadata["coregistered"] = "true";
    int out_b = 0;
    for (int i : ref_keep) {
        const double* p = reference.band_plane(i);
        std::copy(p, p + reference.plane_size(), merged.band_plane(out_b++));
    }
    for (int j : mov_keep) {
        const double* p = aligned.band_plane(j);
        std::copy(p, p + aligned.plane_size(), merged.band_plane(out_b++));
    }
    merged.validate();

    CoregisterResult result;
    result.merged = std::move(merged);
    result.scale = best_scale;
    result.translation = best_t;
    result.reference_tie_band = ref_tie;
    result.moving_tie_band = mov_tie;
    return result;
}

namespace {

int default_reference_band(const SpectralCube& cube) {
    // SNR proxy: per-band mean over spread; favors bands with strong signal
    // relative to their variability
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < cube.bands; ++b) {
        const double* p = cube.band_plane(b);
        double mean = 0.0;
        const std::size_t n = cube.plane_size();
        for (std::size_t i = 0; i < n; ++i) mean += p[i];
        mean /= n;
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = p[i] - mean;
            var += d * d;
        }
        var /= n;
        const double score = var > 0.0 ? mean / std::sqrt(var) : -1.0;
        if (score > best_score) {
            best_score = score;
            best = b;
        }
    }
    return best;
}

struct IRect {
    int x0, y0, x1, y1;  // half-open
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return width() <= 0 || height() <= 0; }
};

IRect intersect(const IRect& a, const IRect& b) {
    return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
            std::min(a.y1, b.y1)};
}

Image2D crop_band(const SpectralCube& cube, int band, const IRect& r) {
    Image2D out(r.width(), r.height());
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x) out.at(x, y) = cube.at(r.y0 + y, r.x0 + x, band);
    return out;
}

}  // namespace

MosaicResult mosaic(const StripLayout& layout, int threads) {
    if (layout.strips.empty()) throw ParameterError("mosaic needs at least one strip");
    const auto& strips = layout.strips;
    for (const auto& s : strips) {
        s.cube.validate();
        if (s.cube.wavelengths != strips.front().cube.wavelengths)
            throw DimensionError("mosaic strips must share wavelengths");
    }

    MosaicResult result;
    const int ref_band = layout.reference_band ? *layout.reference_band
                                               : default_reference_band(strips.front().cube);

    // refined absolute offsets, anchored at the first strip's nominal position
    std::vector<Translation2D> offsets(strips.size());
    offsets[0].dx = strips[0].x;
    offsets[0].dy = strips[0].y;
    offsets[0].confidence = 1.0;

    for (std::size_t i = 0; i + 1 < strips.size(); ++i) {
        const double rel_x = strips[i + 1].x - strips[i].x;
        const double rel_y = strips[i + 1].y - strips[i].y;
        const int rx = static_cast<int>(std::lround(rel_x));
        const int ry = static_cast<int>(std::lround(rel_y));

        const IRect a_rect{0, 0, strips[i].cube.samples, strips[i].cube.lines};
        const IRect b_rect{rx, ry, rx + strips[i + 1].cube.samples,
                           ry + strips[i + 1].cube.lines};
        const IRect overlap = intersect(a_rect, b_rect);
        if (overlap.empty() || std::min(overlap.width(), overlap.height()) < layout.overlap_threshold)
            throw ValidationError("strips " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                  " overlap less than the threshold of " +
                                  std::to_string(layout.overlap_threshold) + " px");

        const Image2D a_sub = crop_band(strips[i].cube, ref_band, overlap);
        const IRect b_local{overlap.x0 - rx, overlap.y0 - ry, overlap.x1 - rx, overlap.y1 - ry};
        const Image2D b_sub = crop_band(strips[i + 1].cube, ref_band, b_local);

        // content displacement d means the true relative offset is nominal - d
        Translation2D d;
        try {
            d = estimate_translation(a_sub, b_sub);
        } catch (const NoSignalError&) {
            result.warnings.push_back("pair " + std::to_string(i) + "/" + std::to_string(i + 1) +
                                      ": overlap has no structure; using nominal offsets");
            d = Translation2D{0.0, 0.0, 0.0};
        }
        if (std::fabs(d.dx) > layout.max_correction || std::fabs(d.dy) > layout.max_correction) {
            if (layout.fallback_to_nominal) {
                result.warnings.push_back(
                    "pair " + std::to_string(i) + "/" + std::to_string(i + 1) +
                    ": refinement (" + std::to_string(d.dx) + ", " + std::to_string(d.dy) +
                    ") exceeds max correction; using nominal offsets");
                d = Translation2D{0.0, 0.0, d.confidence};
            } else {
                throw MisalignmentError("offset refinement (" + std::to_string(d.dx) + ", " +
                                        std::to_string(d.dy) + ") px exceeds max correction " +
                                        std::to_string(layout.max_correction) + " px");
            }
        }
        offsets[i + 1].dx = offsets[i].dx + (rx - d.dx) + (rel_x - rx);
        offsets[i + 1].dy = offsets[i].dy + (ry - d.dy) + (rel_y - ry);
        offsets[i + 1].confidence = d.confidence;
    }
    result.refined_offsets = offsets;

    // canvas bounds
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    for (std::size_t i = 0; i < strips.size(); ++i) {
        min_x = std::min(min_x, offsets[i].dx);
        min_y = std::min(min_y, offsets[i].dy);
        max_x = std::max(max_x, offsets[i].dx + strips[i].cube.samples);
        max_y = std::max(max_y, offsets[i].dy + strips[i].cube.lines);
    }
    const double org_x = std::floor(min_x);
    const double org_y = std::floor(min_y);
    const int out_w = static_cast<int>(std::ceil(max_x - org_x));
    const int out_h = static_cast<int>(std::ceil(max_y - org_y));

    const SpectralCube& first = strips.front().cube;
    SpectralCube canvas(out_w, out_h, first.bands, first.wavelengths, kNoData);
    canvas.units = first.units;
    canvas.code_max = first.code_max;
    canvas.metadata = first.metadata;
    canvas.metadata["mosaic"] = std::to_string(strips.size()) + " strips";

    std::vector<double> weight_acc(static_cast<std::size_t>(out_w) * out_h, 0.0);
    std::vector<double> value_acc(canvas.size(), 0.0);

    for (std::size_t i = 0; i < strips.size(); ++i) {
        const SpectralCube& strip = strips[i].cube;
        const double off_x = offsets[i].dx - org_x;
        const double off_y = offsets[i].dy - org_y;
        const int x_begin = std::max(0, static_cast<int>(std::floor(off_x)));
        const int y_begin = std::max(0, static_cast<int>(std::floor(off_y)));
        const int x_end = std::min(out_w, static_cast<int>(std::ceil(off_x + strip.samples)));
        const int y_end = std::min(out_h, static_cast<int>(std::ceil(off_y + strip.lines)));

        // feather: distance to the nearest strip edge, in canvas pixels
        for (int y = y_begin; y < y_end; ++y) {
            const double ys = (y + 0.5) - off_y - 0.5;  // strip-local coordinate
            for (int x = x_begin; x < x_end; ++x) {
                const double xs = (x + 0.5) - off_x - 0.5;
                if (xs < -0.5 || xs > strip.samples - 0.5 || ys < -0.5 || ys > strip.lines - 0.5)
                    continue;
                const double edge_dist =
                    std::min(std::min(xs + 0.5, strip.samples - 0.5 - xs),
                             std::min(ys + 0.5, strip.lines - 0.5 - ys));
                if (edge_dist <= 0.0) continue;

                // bilinear sample of the strip at (xs, ys)
                const int x0 = std::clamp(static_cast<int>(std::floor(xs)), 0, strip.samples - 1);
                const int y0 = std::clamp(static_cast<int>(std::floor(ys)), 0, strip.lines - 1);
                const int x1 = std::min(x0 + 1, strip.samples - 1);
                const int y1 = std::min(y0 + 1, strip.lines - 1);
                const double tx = std::clamp(xs - x0, 0.0, 1.0);
                const double ty = std::clamp(ys - y0, 0.0, 1.0);

                bool has_no_data = false;
                const std::size_t canvas_px = static_cast<std::size_t>(y) * out_w + x;
                for (int b = 0; b < strip.bands && !has_no_data; ++b) {
                    const double v00 = strip.at(y0, x0, b);
                    const double v01 = strip.at(y0, x1, b);
                    const double v10 = strip.at(y1, x0, b);
                    const double v11 = strip.at(y1, x1, b);
                    if (is_no_data(v00) || is_no_data(v01) || is_no_data(v10) || is_no_data(v11))
                        has_no_data = true;
                }
                if (has_no_data) continue;

                weight_acc[canvas_px] += edge_dist;
                for (int b = 0; b < strip.bands; ++b) {
                    const double v00 = strip.at(y0, x0, b);
                    const double v01 = strip.at(y0, x1, b);
                    const double v10 = strip.at(y1, x0, b);
                    const double v11 = strip.at(y1, x1, b);
                    const double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) +
                                     ty * ((1 - tx) * v10 + tx * v11);
                    value_acc[(static_cast<std::size_t>(b) * out_h + y) * out_w + x] +=
                        edge_dist * v;
                }
            }
        }
    }

    parallel_chunks(canvas.bands, threads, [&](std::int64_t b0, std::int64_t b1) {
        for (std::int64_t bi = b0; bi < b1; ++bi) {
            const int b = static_cast<int>(bi);
            for (int y = 0; y < out_h; ++y)
                for (int x = 0; x < out_w; ++x) {
                    const double wsum = weight_acc[static_cast<std::size_t>(y) * out_w + x];
                    if (wsum > 0.0)
                        canvas.at(y, x, b) =
                            value_acc[(static_cast<std::size_t>(b) * out_h + y) * out_w + x] / wsum;
                }
        }
    });

    result.mosaic = std::move(canvas);
    result.origin_x = org_x;
    result.origin_y = org_y;
    return result;
}

}  // namespace hscal
