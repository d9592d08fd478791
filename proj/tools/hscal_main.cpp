// hscal: push-broom hyperspectral calibration toolchain.
//
// One subcommand per workflow stage plus a manifest-driven pipeline runner.
// Exit codes: 0 success, 1 processing error, 2 usage/validation error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "hscal/artifacts.hpp"
#include "hscal/envi.hpp"
#include "hscal/geometric.hpp"
#include "hscal/noise.hpp"
#include "hscal/pipeline.hpp"
#include "hscal/planner.hpp"
#include "hscal/radiometric.hpp"
#include "hscal/registration.hpp"
#include "hscal/synth.hpp"

namespace fs = std::filesystem;
using namespace hscal;

namespace {

EnviDataType parse_dtype(const std::string& name) {
    if (name == "float32") return EnviDataType::F32;
    if (name == "uint16") return EnviDataType::U16;
    if (name == "int16") return EnviDataType::I16;
    if (name == "uint8") return EnviDataType::U8;
    throw ParameterError("unknown data type '" + name +
                         "' (expected float32, uint16, int16 or uint8)");
}

struct OutputFlags {
    std::string path;
    std::string interleave = "bsq";
    std::string data_type = "float32";

    void add_to(CLI::App* cmd, bool required = true) {
        auto* opt = cmd->add_option("--output", path, "output ENVI header path (.hdr)");
        if (required) opt->required();
        cmd->add_option("--interleave", interleave, "bsq|bil|bip")
            ->check(CLI::IsMember({"bsq", "bil", "bip"}));
        cmd->add_option("--data-type", data_type, "float32|uint16|int16|uint8")
            ->check(CLI::IsMember({"float32", "uint16", "int16", "uint8"}));
    }

    void save(const SpectralCube& cube) const {
        save_cube(cube, path, parse_interleave(interleave), parse_dtype(data_type));
        std::cout << "wrote " << path << "\n";
    }
};

ReferencePanel build_panel_from_flags(const SpectralCube& panel_scan, const DarkFrame& dark,
                                      const std::string& roi_text, const std::string& cert_path,
                                      double nominal, const std::string& statistic, int threads) {
    const Roi roi = parse_roi(roi_text);
    const CertifiedCurve cert = parse_certified_curve(read_text_file(cert_path), nominal);
    return build_reference_panel(panel_scan, dark, roi, cert, parse_panel_statistic(statistic),
                                 threads);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"push-broom hyperspectral calibration toolchain"};
    app.require_subcommand(1);
    int threads = 1;
    auto* threads_opt =
        app.add_option("--threads", threads, "worker threads (outputs are identical at any count)")
            ->check(CLI::PositiveNumber);

    // ---- inspect ----
    std::string in_path, snr_roi, snr_out;
    auto* inspect = app.add_subcommand("inspect", "print cube dimensions and wavelengths");
    inspect->add_option("--input", in_path, "ENVI header path")->required();
    inspect->add_option("--snr-roi", snr_roi, "uniform ROI sample0,line0,width,height for SNR");
    inspect->add_option("--snr-output", snr_out, "write per-band SNR CSV here");

    // ---- dark ----
    std::string dark_in, dark_out;
    auto* dark_cmd = app.add_subcommand("dark", "average a blocked-optics scan into a dark frame");
    dark_cmd->add_option("--input", dark_in, "dark scan (ENVI header)")->required();
    dark_cmd->add_option("--output", dark_out, "dark frame output (.hdr)")->required();

    // ---- flatfield ----
    std::string ff_in, ff_dark, ff_out;
    auto* ff_cmd = app.add_subcommand("flatfield", "build a flat field from a uniform scan");
    ff_cmd->add_option("--input", ff_in, "uniform target scan")->required();
    ff_cmd->add_option("--dark", ff_dark, "dark frame (.hdr)")->required();
    ff_cmd->add_option("--output", ff_out, "flat field output (.hdr)")->required();

    // ---- reflectance ----
    auto* refl = app.add_subcommand("reflectance", "convert raw counts to reflectance factor");
    refl->require_subcommand(1);
    std::string r_in, r_dark, r_stat = "skew_mode";
    std::vector<std::string> r_panel_scans, r_rois, r_certs;
    std::vector<double> r_nominals;
    OutputFlags r_out;

    auto* r_single = refl->add_subcommand("single", "scale by one reference standard");
    auto* r_multi = refl->add_subcommand("multi", "linear fit over several standards");
    for (CLI::App* cmd : {r_single, r_multi}) {
        cmd->add_option("--input", r_in, "raw scan")->required();
        cmd->add_option("--dark", r_dark, "dark frame (.hdr)")->required();
        cmd->add_option("--panel-scan", r_panel_scans, "panel scan (repeatable)")->required();
        cmd->add_option("--panel-roi", r_rois, "panel ROI sample0,line0,width,height")->required();
        cmd->add_option("--certified", r_certs, "certified reflectance CSV")->required();
        cmd->add_option("--nominal", r_nominals, "nominal reflectance, e.g. 0.99")->required();
        cmd->add_option("--statistic", r_stat, "mean|median|skew_mode");
        r_out.add_to(cmd);
    }
    std::string r_save_cal;
    r_multi->add_option("--calibration-out", r_save_cal, "save gain/offset planes (path stem)");

    // ---- denoise ----
    std::string dn_in;
    int dn_window = 0, dn_degree = 2, dn_radius = 0;
    OutputFlags dn_out;
    auto* dn_cmd = app.add_subcommand("denoise", "spectral and/or spatial noise reduction");
    dn_cmd->add_option("--input", dn_in, "input cube")->required();
    dn_cmd->add_option("--spectral-window", dn_window, "odd Savitzky-Golay window (0 = off)");
    dn_cmd->add_option("--spectral-degree", dn_degree, "polynomial degree");
    dn_cmd->add_option("--median-radius", dn_radius, "spatial median radius (0 = off)");
    dn_out.add_to(dn_cmd);

    // ---- geocorrect ----
    std::string gc_in, gc_model;
    int gc_out_samples = 0;
    double gc_scale = 0.0;
    OutputFlags gc_out;
    auto* gc_cmd = app.add_subcommand("geocorrect", "sensor-model and scan-speed correction");
    gc_cmd->add_option("--input", gc_in, "input cube")->required();
    gc_cmd->add_option("--sensor-model", gc_model, "sensor model CSV");
    gc_cmd->add_option("--out-samples", gc_out_samples, "output sample count (default: input)");
    gc_cmd->add_option("--scale", gc_scale, "aspect factor along Y (0 = off)");
    gc_out.add_to(gc_cmd);

    // ---- register ----
    std::string reg_ref, reg_mov;
    double reg_scale = 0.0;
    OutputFlags reg_out;
    auto* reg_cmd = app.add_subcommand("register", "co-register two cubes into one");
    reg_cmd->add_option("--reference", reg_ref, "reference cube (e.g. VNIR)")->required();
    reg_cmd->add_option("--moving", reg_mov, "cube to resample (e.g. SWIR)")->required();
    reg_cmd->add_option("--scale", reg_scale, "known pixel-pitch ratio (0 = search)");
    reg_out.add_to(reg_cmd);

    // ---- mosaic ----
    std::vector<std::string> mo_strips;
    std::vector<double> mo_x, mo_y;
    int mo_threshold = 16;
    double mo_max_corr = 10.0;
    OutputFlags mo_out;
    auto* mo_cmd = app.add_subcommand("mosaic", "assemble scan strips");
    mo_cmd->add_option("--strip", mo_strips, "strip cube (repeatable, scan order)")->required();
    mo_cmd->add_option("--at-x", mo_x, "nominal x offset per strip")->required();
    mo_cmd->add_option("--at-y", mo_y, "nominal y offset per strip")->required();
    mo_cmd->add_option("--overlap-threshold", mo_threshold, "minimum overlap (px)");
    mo_cmd->add_option("--max-correction", mo_max_corr, "refinement limit (px)");
    mo_out.add_to(mo_cmd);

    // ---- focus ----
    std::vector<std::string> fo_series;
    std::string fo_out;
    auto* fo_cmd = app.add_subcommand("focus", "per-wavelength optimal focus distances");
    fo_cmd->add_option("--series", fo_series, "distance=cube.hdr (repeatable, >= 3)")->required();
    fo_cmd->add_option("--output", fo_out, "focus CSV output")->required();

    // ---- efficiency ----
    std::string ef_qe, ef_illum, ef_filter, ef_out;
    auto* ef_cmd = app.add_subcommand("efficiency", "combined system spectral efficiency");
    ef_cmd->add_option("--qe", ef_qe, "quantum efficiency CSV")->required();
    ef_cmd->add_option("--illuminant", ef_illum, "illuminant power CSV")->required();
    ef_cmd->add_option("--filter", ef_filter, "equalization filter transmission CSV");
    ef_cmd->add_option("--output", ef_out, "efficiency CSV output")->required();

    // ---- recommend-integration ----
    double ri_measured = 0, ri_current = 0, ri_code_max = 0, ri_target = 0.8;
    auto* ri_cmd = app.add_subcommand("recommend-integration",
                                      "integration time reaching the target saturation fraction");
    ri_cmd->add_option("--measured-max", ri_measured, "max DN seen in a test scan")->required();
    ri_cmd->add_option("--current", ri_current, "current integration time")->required();
    ri_cmd->add_option("--code-max", ri_code_max, "detector code maximum")->required();
    ri_cmd->add_option("--target", ri_target, "target fraction (default 0.8)");

    // ---- synth ----
    std::string sy_out;
    int sy_samples = 128, sy_lines = 128, sy_bands = 16;
    double sy_noise = 0.0;
    std::uint64_t sy_seed = 0;
    double sy_reflectance = 0.5;
    std::string sy_scene = "blobs";
    auto* sy_cmd = app.add_subcommand("synth", "simulate an acquisition with known ground truth");
    sy_cmd->add_option("--scene", sy_scene, "blobs|flat|ramp|ruler|dark");
    sy_cmd->add_option("--samples", sy_samples);
    sy_cmd->add_option("--lines", sy_lines);
    sy_cmd->add_option("--bands", sy_bands);
    sy_cmd->add_option("--read-noise", sy_noise, "read noise sigma (counts)");
    sy_cmd->add_option("--reflectance", sy_reflectance, "flat-scene reflectance level");
    sy_cmd->add_option("--seed", sy_seed);
    sy_cmd->add_option("--output", sy_out, "raw cube output (.hdr); truth gets _truth.hdr")
        ->required();

    // ---- pipeline ----
    std::string pl_manifest;
    auto* pl_cmd = app.add_subcommand("pipeline", "run a manifest end to end");
    pl_cmd->add_option("--manifest", pl_manifest, "manifest JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*inspect) {
            const SpectralCube cube = load_cube(in_path);
            std::cout << in_path << ": " << cube.samples << " samples x " << cube.lines
                      << " lines x " << cube.bands << " bands\n"
                      << "wavelengths: " << cube.wavelengths.front() << " - "
                      << cube.wavelengths.back() << " nm\n"
                      << "units: "
                      << (cube.units == Units::RawCounts ? "raw counts" : "reflectance factor")
                      << ", code max: " << cube.code_max << "\n";
            for (const auto& [k, v] : cube.metadata) std::cout << k << " = " << v << "\n";
            if (!snr_roi.empty()) {
                const SnrReport report = estimate_snr(cube, parse_roi(snr_roi));
                for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
                if (!snr_out.empty()) {
                    write_text_file(snr_out, report.to_csv());
                    std::cout << "wrote " << snr_out << "\n";
                } else {
                    std::cout << report.to_csv();
                }
            }
        } else if (*dark_cmd) {
            std::vector<std::string> warnings;
            const DarkFrame dark = estimate_dark(load_cube(dark_in), &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            save_dark_frame(dark, dark_out, {{"source", dark_in}});
            std::cout << "wrote " << dark_out << "\n";
        } else if (*ff_cmd) {
            const FlatField flat =
                build_flat_field(load_cube(ff_in), load_dark_frame(ff_dark), threads);
            save_flat_field(flat, ff_out, {{"source", ff_in}});
            std::cout << "wrote " << ff_out << "\n";
        } else if (*r_single || *r_multi) {
            const std::size_t n = r_panel_scans.size();
            if (r_rois.size() != n || r_certs.size() != n || r_nominals.size() != n)
                throw ParameterError(
                    "--panel-scan, --panel-roi, --certified and --nominal must repeat together");
            const SpectralCube cube = load_cube(r_in);
            const DarkFrame dark = load_dark_frame(r_dark);
            std::vector<ReferencePanel> panels;
            for (std::size_t i = 0; i < n; ++i)
                panels.push_back(build_panel_from_flags(load_cube(r_panel_scans[i]), dark,
                                                        r_rois[i], r_certs[i], r_nominals[i],
                                                        r_stat, threads));
            if (*r_single) {
                if (n != 1) throw ParameterError("single mode takes exactly one panel");
                r_out.save(single_target_reflectance(cube, dark, panels.front(), threads));
            } else {
                LinearCalibration cal = fit_multi_target(panels, cube.wavelengths, threads);
                for (const auto& w : cal.warnings) std::cerr << "warning: " << w << "\n";
                if (!r_save_cal.empty()) save_linear_calibration(cal, r_save_cal, {});
                r_out.save(apply_linear_calibration(cube, dark, cal, threads));
            }
        } else if (*dn_cmd) {
            SpectralCube cube = load_cube(dn_in);
            if (dn_window > 0) cube = denoise_spectral(cube, dn_window, dn_degree, threads);
            if (dn_radius > 0) cube = denoise_spatial_median(cube, dn_radius, threads);
            dn_out.save(cube);
        } else if (*gc_cmd) {
            SpectralCube cube = load_cube(gc_in);
            if (!gc_model.empty()) {
                const SensorModel model = parse_sensor_model(read_text_file(gc_model));
                cube = resample_across_track(
                    cube, model, gc_out_samples > 0 ? gc_out_samples : cube.samples, threads);
            }
            if (gc_scale > 0.0) cube = rescale_aspect(cube, gc_scale, threads);
            gc_out.save(cube);
        } else if (*reg_cmd) {
            CoregisterOptions opts;
            opts.threads = threads;
            if (reg_scale > 0.0) opts.scale = reg_scale;
            CoregisterResult res = coregister(load_cube(reg_ref), load_cube(reg_mov), opts);
            std::cout << "scale " << res.scale << ", shift (" << res.translation.dx << ", "
                      << res.translation.dy << "), confidence " << res.translation.confidence
                      << "\n";
            reg_out.save(res.merged);
        } else if (*mo_cmd) {
            if (mo_x.size() != mo_strips.size() || mo_y.size() != mo_strips.size())
                throw ParameterError("--at-x/--at-y must repeat once per --strip");
            StripLayout layout;
            layout.overlap_threshold = mo_threshold;
            layout.max_correction = mo_max_corr;
            for (std::size_t i = 0; i < mo_strips.size(); ++i)
                layout.strips.push_back({load_cube(mo_strips[i]), mo_x[i], mo_y[i]});
            MosaicResult res = mosaic(layout, threads);
            for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
            mo_out.save(res.mosaic);
        } else if (*fo_cmd) {
            FocusSeries series;
            for (const auto& item : fo_series) {
                const std::size_t eq = item.find('=');
                if (eq == std::string::npos)
                    throw ParameterError("--series expects distance=path, got '" + item + "'");
                series.measurements.emplace_back(std::stod(item.substr(0, eq)),
                                                 load_cube(item.substr(eq + 1)));
            }
            write_text_file(fo_out, focus_points_to_csv(focus_curves(series, threads)));
            std::cout << "wrote " << fo_out << "\n";
        } else if (*ef_cmd) {
            const SpectralCurve qe =
                parse_curve_csv(read_text_file(ef_qe), CurveKind::QuantumEfficiency);
            const SpectralCurve illum =
                parse_curve_csv(read_text_file(ef_illum), CurveKind::RelativePower);
            std::optional<SpectralCurve> filter;
            if (!ef_filter.empty())
                filter = parse_curve_csv(read_text_file(ef_filter), CurveKind::Transmission);
            const SpectralCurve eff =
                system_efficiency(qe, illum, filter ? &*filter : nullptr);
            write_text_file(ef_out, curve_to_csv(eff, "value"));
            if (filter) {
                const SpectralCurve eff_plain = system_efficiency(qe, illum, nullptr);
                std::cout << "integration multiplier with filter: "
                          << integration_multiplier(eff_plain, eff) << "\n";
            }
            std::cout << "wrote " << ef_out << "\n";
        } else if (*ri_cmd) {
            std::cout << recommend_integration(ri_measured, ri_current, ri_code_max, ri_target)
                      << "\n";
        } else if (*sy_cmd) {
            SpectralCube scene;
            if (sy_scene == "flat")
                scene = make_flat_scene(sy_samples, sy_lines, sy_bands, 400, 1000, sy_reflectance);
            else if (sy_scene == "dark")
                scene = make_flat_scene(sy_samples, sy_lines, sy_bands, 400, 1000, 0.0);
            else if (sy_scene == "ramp")
                scene = make_ramp_scene(sy_samples, sy_lines, sy_bands, 400, 1000, 0.1, 0.9);
            else if (sy_scene == "ruler")
                scene = make_ruler_scene(sy_samples, sy_lines, sy_bands, 400, 1000, 25, 3, true);
            else
                scene = make_blob_scene(sy_samples, sy_lines, sy_bands, 400, 1000, 30, sy_seed);
            AcquisitionModel model = AcquisitionModel::identity(sy_samples, sy_bands);
            model.integration = 3000.0;
            model.dark = make_dark_map(sy_samples, sy_bands, 40.0, 20.0, sy_seed + 1);
            model.read_noise_sigma = sy_noise;
            model.quantize = true;
            model.seed = sy_seed;
            SimulationResult sim = simulate_acquisition(scene, model, threads);
            save_cube(sim.raw, sy_out, Interleave::BSQ, EnviDataType::U16);
            fs::path truth = sy_out;
            truth.replace_extension();
            truth += "_truth.hdr";
            save_cube(scene, truth, Interleave::BSQ, EnviDataType::F32);
            std::cout << "wrote " << sy_out << " and " << truth.string() << "\n";
            if (sim.clipped.count() > 0) {
                SpectralCube mask(sim.raw.samples, sim.raw.lines, sim.raw.bands,
                                  sim.raw.wavelengths);
                mask.code_max = 1;
                for (std::size_t i = 0; i < mask.data.size(); ++i)
                    mask.data[i] = sim.clipped.v[i];
                fs::path clip = sy_out;
                clip.replace_extension();
                clip += "_clipped.hdr";
                save_cube(mask, clip, Interleave::BSQ, EnviDataType::U8);
                std::cout << "wrote " << clip.string() << " ("
                          << sim.clipped.count() << " clipped)\n";
            }
        } else if (*pl_cmd) {
            const CalibrationManifest manifest = CalibrationManifest::parse_file(pl_manifest);
            const std::optional<int> override =
                threads_opt->count() > 0 ? std::optional<int>(threads) : std::nullopt;
            const RunReport report = run_pipeline(manifest, override);
            std::cout << report.to_text();
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
