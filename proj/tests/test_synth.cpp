#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hscal/radiometric.hpp"
#include "hscal/rng.hpp"
#include "hscal/synth.hpp"

using namespace hscal;

TEST_CASE("simulate_acquisition: clean identity model is exactly invertible") {
    const int samples = 24, lines = 16, bands = 5;
    const SpectralCube scene = make_blob_scene(samples, lines, bands, 450, 950, 10, 3);

    AcquisitionModel model = AcquisitionModel::identity(samples, bands);
    model.integration = 2000.0;
    model.dark = make_dark_map(samples, bands, 40.0, 25.0, 5);
    model.gains = make_striping_gains(samples, bands, 0.08, 6);
    model.illumination = make_uneven_illumination(samples, 0.15, 7);
    for (int b = 0; b < bands; ++b) model.efficiency[b] = 1.0 - 0.3 * b / (bands - 1.0);
    model.quantize = false;

    const SimulationResult sim = simulate_acquisition(scene, model);
    CHECK(sim.raw.units == Units::RawCounts);
    CHECK(sim.clipped.count() == 0);

    // analytic inversion: DN = g*i*e*T*R + dark
    for (int b = 0; b < bands; ++b)
        for (int y = 0; y < lines; ++y)
            for (int s = 0; s < samples; ++s) {
                const double expected = model.gains.at(s, b) * model.illumination[s] *
                                            model.efficiency[b] * model.integration *
                                            scene.at(y, s, b) +
                                        model.dark.at(s, b);
                CHECK(sim.raw.at(y, s, b) == doctest::Approx(expected).epsilon(1e-12));
            }

    // the calibration chain inverts it exactly: dark, full-FOV panel, done
    DarkFrame dark;
    dark.offsets = model.dark;
    dark.source_lines = 100;

    SpectralCube panel_scene = make_flat_scene(samples, 32, bands, 450, 950, 0.99);
    const SimulationResult panel_sim = simulate_acquisition(panel_scene, model);

    CertifiedCurve cert;
    cert.nominal_reflectance = 0.99;
    cert.curve.kind = CurveKind::Reflectance;
    cert.curve.wavelengths = {300, 2600};
    cert.curve.values = {0.99, 0.99};

    const SpectralCube recovered = calibrate_full_fov_panel(
        sim.raw, dark, panel_sim.raw, cert, PanelStatistic::Mean);
    double max_err = 0.0;
    for (std::size_t i = 0; i < scene.data.size(); ++i)
        max_err = std::max(max_err, std::fabs(recovered.data[i] - scene.data[i]));
    CHECK(max_err < 1e-9);
}

TEST_CASE("simulate_acquisition: fixed seed is byte-identical, thread count irrelevant") {
    const SpectralCube scene = make_blob_scene(32, 24, 4, 450, 950, 12, 8);
    AcquisitionModel model = AcquisitionModel::identity(32, 4);
    model.integration = 2500.0;
    model.read_noise_sigma = 6.0;
    model.quantize = true;
    model.seed = 424242;

    const SimulationResult a = simulate_acquisition(scene, model, 1);
    const SimulationResult b = simulate_acquisition(scene, model, 4);
    CHECK(a.raw.data == b.raw.data);

    model.seed = 424243;
    const SimulationResult c = simulate_acquisition(scene, model, 1);
    CHECK(a.raw.data != c.raw.data);
}

TEST_CASE("simulate_acquisition: noise sigma matches its declaration within 5%") {
    const int samples = 100, lines = 1000;
    const SpectralCube scene = make_flat_scene(samples, lines, 1, 500, 600, 0.5);
    AcquisitionModel model = AcquisitionModel::identity(samples, 1);
    model.integration = 4000.0;
    model.read_noise_sigma = 7.0;
    model.quantize = false;
    model.seed = 99;

    const SimulationResult sim = simulate_acquisition(scene, model);
    const double expected_signal = 2000.0;
    double var = 0.0;
    for (double v : sim.raw.data) var += (v - expected_signal) * (v - expected_signal);
    var /= sim.raw.data.size();
    CHECK(std::sqrt(var) == doctest::Approx(7.0).epsilon(0.05));
}

TEST_CASE("simulate_acquisition: quantizer clips and flags") {
    const SpectralCube scene = make_flat_scene(8, 8, 1, 500, 600, 1.0);
    AcquisitionModel model = AcquisitionModel::identity(8, 1);
    model.integration = 5000.0;  // 5000 > code_max = 4095
    model.quantize = true;
    const SimulationResult sim = simulate_acquisition(scene, model);
    CHECK(sim.clipped.count() == sim.raw.data.size());
    for (double v : sim.raw.data) CHECK(v == 4095.0);
}

TEST_CASE("simulate_acquisition: uneven illumination shapes the raw panel profile") {
    const int samples = 64;
    const SpectralCube panel = make_flat_scene(samples, 16, 1, 500, 600, 0.5);
    AcquisitionModel model = AcquisitionModel::identity(samples, 1);
    model.integration = 3000.0;
    model.illumination = make_uneven_illumination(samples, 0.15, 12345);
    model.quantize = false;

    const SimulationResult sim = simulate_acquisition(panel, model);
    // the X profile of the raw counts is proportional to the illumination
    for (int s = 0; s < samples; ++s) {
        const double ratio = sim.raw.at(8, s, 0) / (0.5 * 3000.0);
        CHECK(ratio == doctest::Approx(model.illumination[s]).epsilon(1e-12));
    }
    // and it is visibly uneven (the profile spans >= 15% peak-to-peak)
    const auto [lo, hi] =
        std::minmax_element(model.illumination.begin(), model.illumination.end());
    CHECK((*hi - *lo) / *hi > 0.10);
}

TEST_CASE("contaminate_panel: identity, bias, bounds") {
    std::vector<double> clean(20000, 1000.0);

    CHECK(contaminate_panel(clean, 0.0, 0.6, 1) == clean);

    const std::vector<double> dirty = contaminate_panel(clean, 0.05, 0.6, 2);
    const double mean = std::accumulate(dirty.begin(), dirty.end(), 0.0) / dirty.size();
    // expected mean drop f*(1-d) = 2%
    CHECK((1000.0 - mean) / 1000.0 == doctest::Approx(0.02).epsilon(0.15));

    // boundary fraction accepted
    const std::vector<double> half = contaminate_panel(clean, 0.5, 0.6, 3);
    const double mean_half = std::accumulate(half.begin(), half.end(), 0.0) / half.size();
    CHECK((1000.0 - mean_half) / 1000.0 == doctest::Approx(0.20).epsilon(0.05));

    CHECK_THROWS_AS(contaminate_panel(clean, 0.6, 0.6, 4), ParameterError);
    CHECK_THROWS_AS(contaminate_panel(clean, 0.1, 1.5, 5), ParameterError);
}

TEST_CASE("scene builders: ranges and shapes") {
    const SpectralCube flat = make_flat_scene(8, 4, 3, 400, 1000, 0.25);
    CHECK(flat.units == Units::ReflectanceFactor);
    for (double v : flat.data) CHECK(v == 0.25);
    CHECK(flat.wavelengths == std::vector<double>{400.0, 700.0, 1000.0});

    const SpectralCube ramp = make_ramp_scene(5, 2, 1, 500, 600, 0.0, 1.0);
    CHECK(ramp.at(0, 0, 0) == 0.0);
    CHECK(ramp.at(0, 4, 0) == 1.0);

    const SpectralCube ruler = make_ruler_scene(20, 4, 1, 500, 600, 10, 2, true);
    CHECK(ruler.at(0, 0, 0) == 0.1);
    CHECK(ruler.at(0, 1, 0) == 0.1);
    CHECK(ruler.at(0, 2, 0) == 0.9);
    CHECK(ruler.at(0, 10, 0) == 0.1);

    const SpectralCube blobs = make_blob_scene(16, 16, 2, 400, 900, 6, 77);
    for (double v : blobs.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.1);
    }

    SpectralCube painted = make_flat_scene(10, 10, 2, 400, 900, 0.5);
    CertifiedCurve cert;
    cert.nominal_reflectance = 0.25;
    cert.curve.kind = CurveKind::Reflectance;
    cert.curve.wavelengths = {300, 2600};
    cert.curve.values = {0.25, 0.25};
    paint_panel_region(painted, Roi{2, 2, 4, 4}, cert);
    CHECK(painted.at(3, 3, 0) == 0.25);
    CHECK(painted.at(0, 0, 0) == 0.5);
}

TEST_CASE("make_v_sensor_model: edges 1.0, center 1-depth") {
    const SensorModel m = make_v_sensor_model(101, 0.17);
    CHECK(m.effective_size.front() == doctest::Approx(1.0));
    CHECK(m.effective_size.back() == doctest::Approx(1.0));
    CHECK(m.effective_size[50] == doctest::Approx(0.83));
}
