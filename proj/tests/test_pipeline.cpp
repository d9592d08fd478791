#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hscal/artifacts.hpp"
#include "hscal/envi.hpp"
#include "hscal/pipeline.hpp"
#include "hscal/radiometric.hpp"
#include "hscal/synth.hpp"

using namespace hscal;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("hscal_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// writes dark scan, flat scan, panel scan and scene scan for a small
// synthetic acquisition; returns the ground-truth scene
SpectralCube write_synthetic_inputs(const fs::path& dir, int samples, int lines, int bands,
                                    double read_noise) {
    const SpectralCube scene = make_blob_scene(samples, lines, bands, 450, 950, 12, 7);

    AcquisitionModel model = AcquisitionModel::identity(samples, bands);
    model.integration = 2600.0;
    model.dark = make_dark_map(samples, bands, 40.0, 20.0, 21);
    model.gains = make_striping_gains(samples, bands, 0.10, 22);
    model.illumination = make_uneven_illumination(samples, 0.12, 23);
    for (int b = 0; b < bands; ++b) model.efficiency[b] = 1.0 - 0.25 * b / (bands - 1.0);
    model.read_noise_sigma = read_noise;
    model.quantize = read_noise > 0.0;
    model.seed = 1234;

    const SimulationResult scene_sim = simulate_acquisition(scene, model);
    save_cube(scene_sim.raw, dir / "scene_raw.hdr", Interleave::BIL, EnviDataType::F32);

    SpectralCube dark_scene = make_flat_scene(samples, 100, bands, 450, 950, 0.0);
    AcquisitionModel dark_model = model;
    dark_model.seed = 4321;
    const SimulationResult dark_sim = simulate_acquisition(dark_scene, dark_model);
    save_cube(dark_sim.raw, dir / "dark_scan.hdr", Interleave::BSQ, EnviDataType::F32);

    SpectralCube flat_scene = make_flat_scene(samples, 60, bands, 450, 950, 0.99);
    AcquisitionModel flat_model = model;
    flat_model.seed = 5678;
    const SimulationResult flat_sim = simulate_acquisition(flat_scene, flat_model);
    save_cube(flat_sim.raw, dir / "flat_scan.hdr", Interleave::BSQ, EnviDataType::F32);
    // the flat target doubles as the 99% panel scan
    save_cube(flat_sim.raw, dir / "panel99.hdr", Interleave::BSQ, EnviDataType::F32);

    write_text_file(dir / "certified_99.csv",
                    "wavelength_nm,reflectance\n300,0.99\n2600,0.99\n");
    return scene;
}

json base_manifest(const fs::path& dir, int samples, int lines) {
    json j;
    j["version"] = 1;
    j["log_level"] = "quiet";
    j["threads"] = 1;
    j["output_dir"] = (dir / "out").string();
    j["inputs"]["scan"] = "scene_raw.hdr";
    j["inputs"]["dark_scan"] = "dark_scan.hdr";
    j["inputs"]["flat_scan"] = "flat_scan.hdr";
    j["inputs"]["panels"] = json::array({json{{"name", "p99"},
                                              {"scan", "panel99.hdr"},
                                              {"roi", "0,0," + std::to_string(samples) + "," +
                                                          std::to_string(lines)},
                                              {"certified", "certified_99.csv"},
                                              {"nominal", 0.99}}});
    j["steps"] = json::array({json{{"op", "dark"}},
                              json{{"op", "flatfield"}},
                              json{{"op", "reflectance"},
                                   {"mode", "single"},
                                   {"panel", "p99"},
                                   {"statistic", "mean"}},
                              json{{"op", "export"}, {"path", "final.hdr"}}});
    return j;
}

}  // namespace

TEST_CASE("run_pipeline: noiseless end-to-end run recovers the scene") {
    TempDir tmp("pipeline_exact");
    const int samples = 32, lines = 24, bands = 5;
    const SpectralCube scene = write_synthetic_inputs(tmp.path, samples, lines, bands, 0.0);

    const json j = base_manifest(tmp.path, samples, 60);
    const CalibrationManifest manifest = CalibrationManifest::parse_json(j, tmp.path);
    const RunReport report = run_pipeline(manifest);
    CHECK(report.ok);
    CHECK(report.input_hashes.size() >= 4);
    CHECK(fs::exists(tmp.path / "out" / "report.json"));
    CHECK(fs::exists(tmp.path / "out" / "report.txt"));

    const SpectralCube final_cube = load_cube(tmp.path / "out" / "final.hdr");
    CHECK(final_cube.units == Units::ReflectanceFactor);
    double max_err = 0.0;
    for (std::size_t i = 0; i < scene.data.size(); ++i)
        max_err = std::max(max_err,
                           std::fabs(static_cast<float>(scene.data[i]) - final_cube.data[i]));
    CHECK(max_err < 1e-6);  // float32 export is the only loss
}

TEST_CASE("run_pipeline: identical outputs at 1 and 4 threads") {
    TempDir tmp("pipeline_threads");
    const int samples = 24, lines = 20, bands = 4;
    write_synthetic_inputs(tmp.path, samples, lines, bands, 5.0);

    json j = base_manifest(tmp.path, samples, 60);
    j["steps"].insert(j["steps"].begin() + 2,
                      json{{"op", "denoise_spectral"}, {"window", 3}, {"degree", 1}});

    j["output_dir"] = (tmp.path / "out1").string();
    run_pipeline(CalibrationManifest::parse_json(j, tmp.path), 1);
    j["output_dir"] = (tmp.path / "out4").string();
    run_pipeline(CalibrationManifest::parse_json(j, tmp.path), 4);

    const auto read_bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    CHECK(read_bytes(tmp.path / "out1" / "final.img") ==
          read_bytes(tmp.path / "out4" / "final.img"));
}

TEST_CASE("manifest validation: ordering and references") {
    TempDir tmp("pipeline_validation");
    const int samples = 16, lines = 12, bands = 3;
    write_synthetic_inputs(tmp.path, samples, lines, bands, 0.0);

    SUBCASE("reflectance before dark is rejected") {
        json j = base_manifest(tmp.path, samples, 60);
        std::swap(j["steps"][0], j["steps"][2]);
        CHECK_THROWS_AS(run_pipeline(CalibrationManifest::parse_json(j, tmp.path)),
                        ValidationError);
    }
    SUBCASE("geometric before reflectance is rejected") {
        json j = base_manifest(tmp.path, samples, 60);
        j["inputs"]["sensor_model"] = "model.csv";
        write_text_file(tmp.path / "model.csv",
                        "sample_index,effective_size\n0,1.0\n1,1.0\n");
        j["steps"].insert(j["steps"].begin() + 1, json{{"op", "geocorrect"}});
        CHECK_THROWS_AS(run_pipeline(CalibrationManifest::parse_json(j, tmp.path)),
                        ValidationError);
    }
    SUBCASE("unknown op and missing files are rejected") {
        json j = base_manifest(tmp.path, samples, 60);
        j["steps"].push_back(json{{"op", "sharpen"}});
        CHECK_THROWS_AS(CalibrationManifest::parse_json(j, tmp.path).validate(),
                        ValidationError);

        json j2 = base_manifest(tmp.path, samples, 60);
        j2["inputs"]["scan"] = "missing.hdr";
        CHECK_THROWS_AS(CalibrationManifest::parse_json(j2, tmp.path).validate(),
                        ValidationError);
    }
    SUBCASE("undeclared panel name is rejected") {
        json j = base_manifest(tmp.path, samples, 60);
        j["steps"][2]["panel"] = "p50";
        CHECK_THROWS_AS(CalibrationManifest::parse_json(j, tmp.path).validate(),
                        ValidationError);
    }
}

TEST_CASE("run_pipeline: geometric steps after reflectance") {
    TempDir tmp("pipeline_geo");
    const int samples = 24, lines = 30, bands = 3;
    write_synthetic_inputs(tmp.path, samples, lines, bands, 0.0);

    std::string model_csv = "sample_index,effective_size\n";
    for (int s = 0; s < samples; ++s) model_csv += std::to_string(s) + ",1.0\n";
    write_text_file(tmp.path / "model.csv", model_csv);

    json j = base_manifest(tmp.path, samples, 60);
    j["inputs"]["sensor_model"] = "model.csv";
    j["steps"].insert(j["steps"].end() - 1, json{{"op", "geocorrect"}});
    j["steps"].insert(j["steps"].end() - 1, json{{"op", "rescale"}, {"factor", 1.2}});
    const RunReport report = run_pipeline(CalibrationManifest::parse_json(j, tmp.path));
    CHECK(report.ok);
    const SpectralCube out = load_cube(tmp.path / "out" / "final.hdr");
    CHECK(out.samples == samples);
    CHECK(out.lines == static_cast<int>(std::lround(lines * 1.2)));
}

TEST_CASE("run_pipeline: mosaic manifest assembles strips") {
    TempDir tmp("pipeline_mosaic");
    const SpectralCube master = make_blob_scene(120, 60, 2, 500, 600, 18, 5, 0.15, 0.85, 0.2);
    SpectralCube left(80, 60, 2, master.wavelengths);
    SpectralCube right(80, 60, 2, master.wavelengths);
    left.units = right.units = master.units;
    for (int b = 0; b < 2; ++b)
        for (int y = 0; y < 60; ++y)
            for (int x = 0; x < 80; ++x) {
                left.at(y, x, b) = master.at(y, x, b);
                right.at(y, x, b) = master.at(y, 40 + x, b);
            }
    save_cube(left, tmp.path / "s0.hdr");
    save_cube(right, tmp.path / "s1.hdr");

    json j;
    j["version"] = 1;
    j["log_level"] = "quiet";
    j["output_dir"] = (tmp.path / "out").string();
    j["inputs"]["strips"] =
        json::array({json{{"scan", "s0.hdr"}, {"x", 0}, {"y", 0}},
                     json{{"scan", "s1.hdr"}, {"x", 41}, {"y", 1}}});
    j["steps"] = json::array(
        {json{{"op", "mosaic"}, {"overlap_threshold", 16}, {"reference_band", 0}},
         json{{"op", "export"}, {"path", "mosaic.hdr"}}});
    const RunReport report = run_pipeline(CalibrationManifest::parse_json(j, tmp.path));
    CHECK(report.ok);
    const SpectralCube out = load_cube(tmp.path / "out" / "mosaic.hdr");
    CHECK(out.samples >= 120);
    CHECK(out.bands == 2);
}

TEST_CASE("run_pipeline: coregister manifest merges a secondary cube") {
    TempDir tmp("pipeline_coreg");
    SpectralCube vnir = make_blob_scene(64, 48, 3, 400, 700, 14, 8, 0.15, 0.85, 0.25);
    SpectralCube swir = make_blob_scene(64, 48, 3, 650, 1000, 14, 8, 0.15, 0.85, 0.25);
    save_cube(vnir, tmp.path / "vnir.hdr");
    save_cube(swir, tmp.path / "swir.hdr");

    json j;
    j["version"] = 1;
    j["log_level"] = "quiet";
    j["output_dir"] = (tmp.path / "out").string();
    j["inputs"]["scan"] = "vnir.hdr";
    j["inputs"]["secondary"] = "swir.hdr";
    j["steps"] = json::array({json{{"op", "coregister"}, {"scale", 1.0}},
                              json{{"op", "export"}, {"path", "merged.hdr"}}});
    const RunReport report = run_pipeline(CalibrationManifest::parse_json(j, tmp.path));
    CHECK(report.ok);
    const SpectralCube out = load_cube(tmp.path / "out" / "merged.hdr");
    for (std::size_t i = 1; i < out.wavelengths.size(); ++i)
        CHECK(out.wavelengths[i] > out.wavelengths[i - 1]);
}

TEST_CASE("calibration artifacts round-trip through ENVI with sidecars") {
    TempDir tmp("artifacts");

    DarkFrame dark;
    dark.offsets = DetectorMap(6, 3);
    for (int b = 0; b < 3; ++b)
        for (int s = 0; s < 6; ++s) dark.offsets.at(s, b) = 40.0 + b * 6 + s;
    dark.source_lines = 128;
    dark.integration_tag = "10ms gain2";
    save_dark_frame(dark, tmp.path / "dark.hdr", {{"source", "scan_001"}});
    const DarkFrame dark2 = load_dark_frame(tmp.path / "dark.hdr");
    CHECK(dark2.offsets.v == dark.offsets.v);
    CHECK(dark2.source_lines == 128);
    CHECK(dark2.integration_tag == "10ms gain2");
    CHECK(load_sidecar(tmp.path / "dark.hdr").at("source") == "scan_001");

    FlatField flat;
    flat.gains = DetectorMap(6, 3, 1.0);
    flat.gains.at(2, 1) = 1.25;
    save_flat_field(flat, tmp.path / "flat.hdr");
    CHECK(load_flat_field(tmp.path / "flat.hdr").gains.v == flat.gains.v);

    LinearCalibration cal;
    cal.gain = DetectorMap(6, 3, 10000.0);
    cal.offset = DetectorMap(6, 3, 80.0);
    cal.n_targets_used = DetectorCountMap(6, 3, 4);
    save_linear_calibration(cal, tmp.path / "cal");
    const LinearCalibration cal2 = load_linear_calibration(tmp.path / "cal");
    CHECK(cal2.gain.v == cal.gain.v);
    CHECK(cal2.offset.v == cal.offset.v);
}

TEST_CASE("run_pipeline: inspect-only manifest") {
    TempDir tmp("pipeline_inspect");
    write_synthetic_inputs(tmp.path, 12, 10, 3, 0.0);
    json j;
    j["version"] = 1;
    j["log_level"] = "quiet";
    j["output_dir"] = (tmp.path / "out").string();
    j["inputs"]["scan"] = "scene_raw.hdr";
    j["steps"] = json::array({json{{"op", "inspect"}}});
    const RunReport report = run_pipeline(CalibrationManifest::parse_json(j, tmp.path));
    CHECK(report.ok);
    REQUIRE(report.steps.size() == 1);
    CHECK(report.steps[0].note.find("12 samples") != std::string::npos);
}
