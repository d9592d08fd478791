#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "hscal/envi.hpp"
#include "hscal/planner.hpp"
#include "hscal/rng.hpp"

using namespace hscal;

namespace {

const std::filesystem::path kDataDir = HSCAL_DATA_DIR;

SpectralCurve flat_curve(double lo, double hi, double value, CurveKind kind) {
    SpectralCurve c;
    c.kind = kind;
    c.wavelengths = {lo, hi};
    c.values = {value, value};
    return c;
}

SpectralCurve load_fixture(const std::string& name, CurveKind kind) {
    return parse_curve_csv(read_text_file(kDataDir / name), kind);
}

Image2D checkerboard(int n, int cell) {
    Image2D img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) img.at(x, y) = ((x / cell + y / cell) % 2) ? 1.0 : 0.0;
    return img;
}

Image2D box_blur(const Image2D& img, int radius) {
    Image2D out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            int n = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
                    acc += img.at(sx, sy);
                    ++n;
                }
            out.at(x, y) = acc / n;
        }
    return out;
}

}  // namespace

TEST_CASE("system_efficiency: flat curves multiply to a flat product") {
    const SpectralCurve qe = flat_curve(400, 1000, 1.0, CurveKind::QuantumEfficiency);
    const SpectralCurve illum = flat_curve(400, 1000, 1.0, CurveKind::RelativePower);
    const SpectralCurve eff = system_efficiency(qe, illum);
    for (double v : eff.values) CHECK(v == doctest::Approx(1.0));

    const SpectralCurve disjoint = flat_curve(1500, 2000, 1.0, CurveKind::RelativePower);
    CHECK_THROWS_AS(system_efficiency(qe, disjoint), DomainError);
}

TEST_CASE("system_efficiency: commutative and never increased by a filter") {
    const SpectralCurve qe = load_fixture("qe_vnir.csv", CurveKind::QuantumEfficiency);
    const SpectralCurve illum = load_fixture("illuminant_halogen.csv", CurveKind::RelativePower);
    const SpectralCurve filter =
        load_fixture("filter_equalization.csv", CurveKind::Transmission);

    const SpectralCurve ab = system_efficiency(qe, illum);
    const SpectralCurve ba = system_efficiency(illum, qe);
    REQUIRE(ab.wavelengths == ba.wavelengths);
    for (std::size_t i = 0; i < ab.values.size(); ++i)
        CHECK(ab.values[i] == doctest::Approx(ba.values[i]));

    const SpectralCurve with = system_efficiency(qe, illum, &filter);
    for (std::size_t i = 0; i < with.wavelengths.size(); ++i)
        CHECK(with.values[i] <= ab.value_at(with.wavelengths[i]) + 1e-12);
}

TEST_CASE("system_efficiency: fixture curves reproduce the reported ratios") {
    const SpectralCurve qe = load_fixture("qe_vnir.csv", CurveKind::QuantumEfficiency);
    const SpectralCurve illum = load_fixture("illuminant_halogen.csv", CurveKind::RelativePower);
    const SpectralCurve filter =
        load_fixture("filter_equalization.csv", CurveKind::Transmission);

    const SpectralCurve without = system_efficiency(qe, illum);
    // peak sits just below 600 nm region and 1000 nm is > 50x weaker
    CHECK(without.value_at(600.0) / without.value_at(1000.0) > 50.0);

    const SpectralCurve with = system_efficiency(qe, illum, &filter);
    const double multiplier = integration_multiplier(without, with);
    CHECK(multiplier >= 2.5);
    CHECK(multiplier <= 3.5);

    // flatness improves; with transmission <= 1 the max/min reduction is
    // bounded above by the integration multiplier, so ~3x is the ceiling
    auto ratio = [](const SpectralCurve& c) {
        return *std::max_element(c.values.begin(), c.values.end()) /
               *std::min_element(c.values.begin(), c.values.end());
    };
    const double reduction = ratio(without) / ratio(with);
    CHECK(reduction > 2.0);
    CHECK(reduction <= multiplier + 1e-9);
}

TEST_CASE("integration_multiplier: identity and flat attenuation") {
    const SpectralCurve qe = flat_curve(400, 1000, 0.8, CurveKind::QuantumEfficiency);
    const SpectralCurve illum = flat_curve(400, 1000, 1.0, CurveKind::RelativePower);
    const SpectralCurve eff = system_efficiency(qe, illum);

    CHECK(integration_multiplier(eff, eff) == doctest::Approx(1.0));

    const SpectralCurve half = flat_curve(400, 1000, 0.5, CurveKind::Transmission);
    const SpectralCurve with = system_efficiency(qe, illum, &half);
    CHECK(integration_multiplier(eff, with) == doctest::Approx(2.0));

    const SpectralCurve zero = flat_curve(400, 1000, 0.0, CurveKind::QuantumEfficiency);
    const SpectralCurve dead = system_efficiency(zero, illum);
    CHECK_THROWS_AS(integration_multiplier(eff, dead), DegenerateError);
}

TEST_CASE("sharpness: variance metric") {
    CHECK(sharpness(Image2D(8, 8, 5.0)) == 0.0);

    Image2D half(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) half.at(x, y) = (x < 4) ? 0.0 : 2.0;
    CHECK(sharpness(half) == doctest::Approx(1.0));

    const Image2D sharp = checkerboard(32, 4);
    CHECK(sharpness(sharp) > sharpness(box_blur(sharp, 2)));

    CHECK_THROWS_AS(sharpness(Image2D()), ParameterError);
}

TEST_CASE("focus_curves: parabolic sharpness profiles are refined to the vertex") {
    // contrast is scaled so that per-band variance is exactly a parabola with
    // vertex d_k; the three-point refinement must recover d_k within 10% of
    // the 1.0-unit grid spacing
    const int n_dist = 9, bands = 3;
    const double optima[bands] = {3.3, 4.0, 5.6};
    Image2D base = checkerboard(48, 6);
    const double base_mean = 0.5;
    for (double& v : base.v) v -= base_mean;  // zero-mean, variance 0.25

    FocusSeries series;
    for (int k = 0; k < n_dist; ++k) {
        const double d = 1.0 + k;
        SpectralCube cube(48, 48, bands, {500.0, 600.0, 700.0});
        for (int b = 0; b < bands; ++b) {
            const double variance = 100.0 - 2.0 * (d - optima[b]) * (d - optima[b]);
            Image2D img = base;
            const double gain = std::sqrt(variance / 0.25);
            for (double& v : img.v) v = base_mean + gain * v;
            cube.set_band_image(b, img);
        }
        series.measurements.emplace_back(d, std::move(cube));
    }

    const std::vector<FocusPoint> points = focus_curves(series);
    REQUIRE(points.size() == bands);
    for (int b = 0; b < bands; ++b) {
        CHECK(!points[b].at_edge);
        CHECK(!points[b].no_peak);
        CHECK(std::fabs(points[b].optimal_distance - optima[b]) <= 0.1);
    }
}

TEST_CASE("focus_curves: blur-based series localizes optima to the grid cell") {
    const int n_dist = 7;
    const double optimum = 4.0;
    const Image2D base = checkerboard(48, 6);
    FocusSeries series;
    for (int k = 0; k < n_dist; ++k) {
        const double d = 1.0 + k;
        const int radius = static_cast<int>(std::lround(std::fabs(d - optimum)));
        SpectralCube cube(48, 48, 1, {500.0});
        cube.set_band_image(0, radius > 0 ? box_blur(base, radius) : base);
        series.measurements.emplace_back(d, std::move(cube));
    }
    const std::vector<FocusPoint> points = focus_curves(series);
    CHECK(std::fabs(points[0].optimal_distance - optimum) <= 0.5);
}

TEST_CASE("focus_curves: edge peaks and flat series are flagged") {
    const Image2D base = checkerboard(32, 4);
    FocusSeries series;
    for (int k = 0; k < 5; ++k) {
        SpectralCube cube(32, 32, 2, {500.0, 600.0});
        cube.set_band_image(0, k == 0 ? base : box_blur(base, k));  // monotone: peak at edge
        cube.set_band_image(1, base);                               // flat: no peak
        series.measurements.emplace_back(1.0 + k, std::move(cube));
    }
    const std::vector<FocusPoint> points = focus_curves(series);
    CHECK(points[0].at_edge);
    CHECK(points[0].optimal_distance == 1.0);
    CHECK(points[1].no_peak);

    FocusSeries too_short;
    too_short.measurements.emplace_back(1.0, SpectralCube(4, 4, 1, {500.0}));
    too_short.measurements.emplace_back(2.0, SpectralCube(4, 4, 1, {500.0}));
    CHECK_THROWS_AS(focus_curves(too_short), InsufficientDataError);
}

TEST_CASE("focus_curves: one globally best distance gives identical optima per band") {
    const Image2D base = checkerboard(32, 4);
    FocusSeries series;
    for (int k = 0; k < 5; ++k) {
        SpectralCube cube(32, 32, 3, {500.0, 600.0, 700.0});
        const Image2D img = (k == 2) ? base : box_blur(base, std::abs(k - 2));
        for (int b = 0; b < 3; ++b) cube.set_band_image(b, img);
        series.measurements.emplace_back(1.0 + k, std::move(cube));
    }
    const std::vector<FocusPoint> points = focus_curves(series);
    CHECK(points[0].optimal_distance == points[1].optimal_distance);
    CHECK(points[1].optimal_distance == points[2].optimal_distance);
    CHECK(points[0].optimal_distance == doctest::Approx(3.0));
}

TEST_CASE("focus_curves: argmax invariant to uniform brightness scaling") {
    const Image2D base = checkerboard(32, 4);
    auto build = [&](double gain) {
        FocusSeries series;
        for (int k = 0; k < 5; ++k) {
            SpectralCube cube(32, 32, 1, {500.0});
            Image2D img = (k == 2) ? base : box_blur(base, std::abs(k - 2));
            for (double& v : img.v) v *= gain;
            cube.set_band_image(0, img);
            series.measurements.emplace_back(1.0 + k, std::move(cube));
        }
        return focus_curves(series);
    };
    const auto a = build(1.0);
    const auto b = build(7.5);
    CHECK(a[0].optimal_distance == doctest::Approx(b[0].optimal_distance));
}

TEST_CASE("recommend_integration") {
    // measured at the target fraction: unchanged
    CHECK(recommend_integration(0.8 * 4095, 10.0, 4095) == doctest::Approx(10.0));
    // dark painting at 40% of range: double the integration
    CHECK(recommend_integration(0.4 * 4095, 10.0, 4095) == doctest::Approx(20.0));
    // homogeneous in the current integration time
    CHECK(recommend_integration(0.4 * 4095, 20.0, 4095) == doctest::Approx(40.0));
    // clipped input is unusable
    CHECK_THROWS_AS(recommend_integration(4095.0, 10.0, 4095.0), SaturatedInputError);
    CHECK_THROWS_AS(recommend_integration(5000.0, 10.0, 4095.0), SaturatedInputError);
    CHECK_THROWS_AS(recommend_integration(0.0, 10.0, 4095.0), ParameterError);
    CHECK_THROWS_AS(recommend_integration(100.0, 10.0, 4095.0, 1.5), ParameterError);
}
