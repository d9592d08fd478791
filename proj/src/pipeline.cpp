#include "hscal/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hscal/artifacts.hpp"
#include "hscal/envi.hpp"
#include "hscal/geometric.hpp"
#include "hscal/noise.hpp"
#include "hscal/radiometric.hpp"
#include "hscal/registration.hpp"
#include "hscal/version.hpp"

namespace hscal {

using nlohmann::json;

namespace {

// Fig-9 ordering ranks; steps must appear with non-decreasing rank.
// Denoising, inspection and export run wherever the manifest puts them.
int step_rank(const std::string& op) {
    if (op == "dark") return 10;
    if (op == "flatfield") return 20;
    if (op == "reflectance") return 30;
    if (op == "geocorrect" || op == "rescale") return 40;
    if (op == "coregister" || op == "mosaic") return 50;
    return -1;  // order-free
}

const char* kKnownOps[] = {"inspect",   "dark",     "flatfield", "denoise_spectral",
                           "denoise_spatial", "reflectance", "geocorrect", "rescale",
                           "coregister", "mosaic",  "export"};

bool known_op(const std::string& op) {
    for (const char* k : kKnownOps)
        if (op == k) return true;
    return false;
}

void require_file(const std::filesystem::path& p, const std::string& what, int step_index) {
    if (!std::filesystem::exists(p)) {
        std::ostringstream oss;
        oss << what << " '" << p.string() << "' does not exist";
        if (step_index >= 0) oss << " (step " << step_index + 1 << ")";
        throw ValidationError(oss.str());
    }
}

}  // namespace

std::filesystem::path CalibrationManifest::resolve(const std::string& relative) const {
    const std::filesystem::path p(relative);
    return p.is_absolute() ? p : base_dir / p;
}

CalibrationManifest CalibrationManifest::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("manifest is not valid JSON: " + std::string(e.what()));
    }
    return parse_json(j, std::filesystem::absolute(path).parent_path());
}

CalibrationManifest CalibrationManifest::parse_json(const json& j,
                                                    const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ValidationError("manifest root must be a JSON object");
    CalibrationManifest m;
    m.base_dir = base_dir;
    try {
        m.version = j.value("version", 1);
        m.threads = j.value("threads", 1);
        m.seed = j.value("seed", std::uint64_t{0});
        m.log_level = j.value("log_level", std::string("info"));
        m.output_dir = m.resolve(j.value("output_dir", std::string("out")));

        if (j.contains("inputs")) {
            const json& in = j.at("inputs");
            if (in.contains("scan")) m.scan = in.at("scan").get<std::string>();
            if (in.contains("dark_scan")) m.dark_scan = in.at("dark_scan").get<std::string>();
            if (in.contains("flat_scan")) m.flat_scan = in.at("flat_scan").get<std::string>();
            if (in.contains("sensor_model"))
                m.sensor_model = in.at("sensor_model").get<std::string>();
            if (in.contains("secondary")) m.secondary = in.at("secondary").get<std::string>();
            for (const json& p : in.value("panels", json::array())) {
                ManifestPanel panel;
                panel.name = p.at("name").get<std::string>();
                panel.scan = p.at("scan").get<std::string>();
                panel.roi = p.at("roi").get<std::string>();
                panel.certified = p.at("certified").get<std::string>();
                panel.nominal = p.at("nominal").get<double>();
                m.panels.push_back(std::move(panel));
            }
            for (const json& s : in.value("strips", json::array())) {
                ManifestStrip strip;
                strip.scan = s.at("scan").get<std::string>();
                strip.x = s.value("x", 0.0);
                strip.y = s.value("y", 0.0);
                m.strips.push_back(std::move(strip));
            }
        }

        for (const json& s : j.value("steps", json::array())) {
            PipelineStep step;
            step.op = s.at("op").get<std::string>();
            step.params = s;
            m.steps.push_back(std::move(step));
        }
    } catch (const json::exception& e) {
        throw ValidationError("manifest field error: " + std::string(e.what()));
    }
    return m;
}

void CalibrationManifest::validate() const {
    if (version != 1) throw ValidationError("unsupported manifest version " + std::to_string(version));
    if (threads < 1) throw ValidationError("threads must be >= 1");
    if (steps.empty()) throw ValidationError("manifest has no steps");

    int last_rank = 0;
    std::string last_ranked_op = "(start)";
    bool have_dark = false, have_reflectance = false;
    bool have_cube = scan.has_value();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& step = steps[i];
        const std::string where = "step " + std::to_string(i + 1) + " (" + step.op + ")";
        if (!known_op(step.op)) throw ValidationError(where + ": unknown operation");

        if (step.op == "mosaic")
            have_cube = true;  // assembles its cube from the strips
        else if (step.op != "inspect" && !have_cube)
            throw ValidationError(where + ": needs inputs.scan (no cube available yet)");

        const int rank = step_rank(step.op);
        if (rank >= 0) {
            if (rank < last_rank)
                throw ValidationError(where + ": must come before " + last_ranked_op +
                                      " in the workflow (dark -> flat -> reflectance -> "
                                      "geometric -> registration/mosaic)");
            last_rank = rank;
            last_ranked_op = step.op;
        }

        if (step.op == "dark") {
            if (!dark_scan) throw ValidationError(where + ": inputs.dark_scan is required");
            have_dark = true;
        } else if (step.op == "flatfield") {
            if (!flat_scan) throw ValidationError(where + ": inputs.flat_scan is required");
            if (!have_dark) throw ValidationError(where + ": requires a prior dark step");
        } else if (step.op == "denoise_spectral") {
            if (!have_dark) throw ValidationError(where + ": requires a prior dark step");
            if (!step.params.contains("window") || !step.params.contains("degree"))
                throw ValidationError(where + ": needs 'window' and 'degree'");
        } else if (step.op == "denoise_spatial") {
            if (!have_dark) throw ValidationError(where + ": requires a prior dark step");
            if (!step.params.contains("radius")) throw ValidationError(where + ": needs 'radius'");
        } else if (step.op == "reflectance") {
            if (!have_dark) throw ValidationError(where + ": requires a prior dark step");
            const std::string mode = step.params.value("mode", std::string("single"));
            if (mode == "single") {
                const std::string panel = step.params.value("panel", std::string());
                if (panel.empty())
                    throw ValidationError(where + ": single mode needs a 'panel' name");
                bool found = false;
                for (const auto& p : panels) found = found || p.name == panel;
                if (!found)
                    throw ValidationError(where + ": panel '" + panel + "' is not declared");
            } else if (mode == "multi") {
                if (panels.size() < 2)
                    throw ValidationError(where + ": multi mode needs at least 2 panels");
            } else {
                throw ValidationError(where + ": mode must be 'single' or 'multi'");
            }
            have_reflectance = true;
        } else if (step.op == "geocorrect") {
            if (!sensor_model) throw ValidationError(where + ": needs inputs.sensor_model");
        } else if (step.op == "rescale") {
            if (!step.params.contains("factor")) throw ValidationError(where + ": needs 'factor'");
        } else if (step.op == "coregister") {
            if (!secondary) throw ValidationError(where + ": inputs.secondary is required");
        } else if (step.op == "mosaic") {
            if (strips.size() < 1) throw ValidationError(where + ": inputs.strips is required");
        } else if (step.op == "export") {
            if (!step.params.contains("path")) throw ValidationError(where + ": needs 'path'");
        }
    }
    (void)have_reflectance;
    (void)have_cube;

    // every referenced file must exist up front
    if (scan) require_file(resolve(*scan), "inputs.scan", -1);
    if (dark_scan) require_file(resolve(*dark_scan), "inputs.dark_scan", -1);
    if (flat_scan) require_file(resolve(*flat_scan), "inputs.flat_scan", -1);
    if (sensor_model) require_file(resolve(*sensor_model), "inputs.sensor_model", -1);
    if (secondary) require_file(resolve(*secondary), "inputs.secondary", -1);
    for (const auto& p : panels) {
        require_file(resolve(p.scan), "panel '" + p.name + "' scan", -1);
        require_file(resolve(p.certified), "panel '" + p.name + "' certified csv", -1);
        parse_roi(p.roi);
        if (!(p.nominal > 0.0 && p.nominal <= 1.1))
            throw ValidationError("panel '" + p.name + "': nominal reflectance out of (0, 1.1]");
    }
    for (const auto& s : strips) require_file(resolve(s.scan), "strip scan", -1);

}

namespace {

// chain of processing already applied to the current cube; reference panel
// scans replay it so statistics match the scan's processing state
struct ChainOp {
    std::string op;
    int window = 0, degree = 0, radius = 0;
};

struct PipelineState {
    SpectralCube current;
    bool has_current = false;
    DarkFrame dark;
    bool has_dark = false;
    FlatField flat;
    bool has_flat = false;
    std::vector<ChainOp> chain;  // ops applied after dark subtraction
};

SpectralCube replay_chain(SpectralCube cube, const PipelineState& state, const DarkFrame& dark,
                          int threads) {
    cube = subtract_dark(cube, dark, threads);
    for (const auto& op : state.chain) {
        if (op.op == "flat")
            cube = apply_flat_field(cube, state.flat, threads);
        else if (op.op == "denoise_spectral")
            cube = denoise_spectral(cube, op.window, op.degree, threads);
        else if (op.op == "denoise_spatial")
            cube = denoise_spatial_median(cube, op.radius, threads);
    }
    return cube;
}

DarkFrame zero_dark(int samples, int bands) {
    DarkFrame d;
    d.offsets = DetectorMap(samples, bands, 0.0);
    d.source_lines = 1;
    return d;
}

// panel saturation evaluated on the raw scan, reduced over the ROI columns
DetectorMask panel_saturation(const SpectralCube& raw, const Roi& roi) {
    DetectorMask mask(raw.samples, raw.bands, false);
    if (!(raw.code_max > 0)) return mask;
    const double threshold = kSaturationExclusionFraction * raw.code_max;
    for (int b = 0; b < raw.bands; ++b)
        for (int s = roi.sample0; s < roi.sample_end(); ++s)
            for (int y = roi.line0; y < roi.line_end(); ++y)
                if (raw.at(y, s, b) >= threshold) {
                    mask.set(s, b, true);
                    break;
                }
    return mask;
}

}  // namespace

json RunReport::to_json() const {
    json j;
    j["tool_version"] = kVersion;
    j["ok"] = ok;
    if (!error.empty()) j["error"] = error;
    j["threads"] = threads;
    j["seed"] = seed;
    json steps_json = json::array();
    for (const auto& s : steps) {
        json sj;
        sj["op"] = s.op;
        sj["milliseconds"] = s.milliseconds;
        if (!s.note.empty()) sj["note"] = s.note;
        if (!s.warnings.empty()) sj["warnings"] = s.warnings;
        steps_json.push_back(sj);
    }
    j["steps"] = steps_json;
    j["input_hashes"] = input_hashes;
    j["outputs"] = outputs;
    return j;
}

std::string RunReport::to_text() const {
    std::ostringstream oss;
    oss << "hscal " << kVersion << " pipeline run "
        << (ok ? "succeeded" : ("FAILED: " + error)) << "\n";
    oss << "threads: " << threads << "  seed: " << seed << "\n";
    oss << "inputs:\n";
    for (const auto& [path, hash] : input_hashes) oss << "  " << hash << "  " << path << "\n";
    oss << "steps:\n";
    for (const auto& s : steps) {
        oss << "  " << s.op << "  (" << s.milliseconds << " ms)";
        if (!s.note.empty()) oss << "  " << s.note;
        oss << "\n";
        for (const auto& w : s.warnings) oss << "    warning: " << w << "\n";
    }
    oss << "outputs:\n";
    for (const auto& o : outputs) oss << "  " << o << "\n";
    return oss.str();
}

RunReport run_pipeline(const CalibrationManifest& manifest, std::optional<int> thread_override) {
    manifest.validate();
    const int threads = thread_override.value_or(manifest.threads);

    RunReport report;
    report.threads = threads;
    report.seed = manifest.seed;

    std::filesystem::create_directories(manifest.output_dir);

    auto note_input = [&](const std::filesystem::path& p) {
        report.input_hashes[p.string()] = hash_file_hex(p);
    };

    PipelineState state;
    if (manifest.scan) {
        const auto p = manifest.resolve(*manifest.scan);
        state.current = load_cube(p);
        state.has_current = true;
        note_input(p);
    }

    auto save_current = [&](const std::filesystem::path& path, const json& params) {
        const Interleave il = parse_interleave(params.value("interleave", std::string("bsq")));
        const std::string dt = params.value("data_type", std::string("float32"));
        EnviDataType dtype;
        if (dt == "float32" || dt == "4")
            dtype = EnviDataType::F32;
        else if (dt == "uint16" || dt == "12")
            dtype = EnviDataType::U16;
        else if (dt == "uint8" || dt == "1")
            dtype = EnviDataType::U8;
        else if (dt == "int16" || dt == "2")
            dtype = EnviDataType::I16;
        else
            throw ValidationError("unknown data_type '" + dt + "'");
        save_cube(state.current, path, il, dtype);
        report.outputs.push_back(path.string());
    };

    auto finalize = [&]() {
        write_text_file(manifest.output_dir / "report.json", report.to_json().dump(2) + "\n");
        write_text_file(manifest.output_dir / "report.txt", report.to_text());
    };

    try {
        for (std::size_t i = 0; i < manifest.steps.size(); ++i) {
            const auto& step = manifest.steps[i];
            StepReport sr;
            sr.op = step.op;
            const auto t0 = std::chrono::steady_clock::now();

            if (step.op == "inspect") {
                std::ostringstream oss;
                if (state.has_current) {
                    oss << state.current.samples << " samples x " << state.current.lines
                        << " lines x " << state.current.bands << " bands, "
                        << state.current.wavelengths.front() << "-"
                        << state.current.wavelengths.back() << " nm, units "
                        << (state.current.units == Units::RawCounts ? "raw counts"
                                                                    : "reflectance factor");
                } else {
                    oss << "no scan loaded";
                }
                sr.note = oss.str();
            } else if (step.op == "dark") {
                const auto p = manifest.resolve(*manifest.dark_scan);
                const SpectralCube dark_scan = load_cube(p);
                note_input(p);
                state.dark = estimate_dark(dark_scan, &sr.warnings);
                state.has_dark = true;
                if (state.has_current)
                    state.current = subtract_dark(state.current, state.dark, threads);
                sr.note = "offsets from " + std::to_string(state.dark.source_lines) + " lines";
                if (step.params.contains("save"))
                    save_dark_frame(state.dark,
                                    manifest.output_dir /
                                        step.params.at("save").get<std::string>(),
                                    {{"source", p.string()}});
            } else if (step.op == "flatfield") {
                const auto p = manifest.resolve(*manifest.flat_scan);
                const SpectralCube flat_scan = load_cube(p);
                note_input(p);
                state.flat = build_flat_field(flat_scan, state.dark, threads);
                state.has_flat = true;
                if (state.has_current)
                    state.current = apply_flat_field(state.current, state.flat, threads);
                state.chain.push_back({"flat"});
                if (step.params.contains("save"))
                    save_flat_field(state.flat,
                                    manifest.output_dir /
                                        step.params.at("save").get<std::string>(),
                                    {{"source", p.string()}});
            } else if (step.op == "denoise_spectral") {
                const int window = step.params.at("window").get<int>();
                const int degree = step.params.at("degree").get<int>();
                state.current = denoise_spectral(state.current, window, degree, threads);
                state.chain.push_back({"denoise_spectral", window, degree, 0});
            } else if (step.op == "denoise_spatial") {
                const int radius = step.params.at("radius").get<int>();
                state.current = denoise_spatial_median(state.current, radius, threads);
                state.chain.push_back({"denoise_spatial", 0, 0, radius});
            } else if (step.op == "reflectance") {
                const std::string mode = step.params.value("mode", std::string("single"));
                const PanelStatistic stat = parse_panel_statistic(
                    step.params.value("statistic", std::string("skew_mode")));

                std::vector<ReferencePanel> built;
                for (const auto& mp : manifest.panels) {
                    if (mode == "single" &&
                        mp.name != step.params.value("panel", std::string()))
                        continue;
                    const auto scan_path = manifest.resolve(mp.scan);
                    const auto cert_path = manifest.resolve(mp.certified);
                    SpectralCube raw = load_cube(scan_path);
                    note_input(scan_path);
                    note_input(cert_path);
                    const Roi roi = parse_roi(mp.roi);
                    const DetectorMask sat = panel_saturation(raw, roi);
                    SpectralCube processed = replay_chain(std::move(raw), state, state.dark, threads);
                    const DarkFrame zero = zero_dark(processed.samples, processed.bands);
                    PanelStats stats =
                        robust_panel_statistic(processed, zero, roi, stat, threads);
                    ReferencePanel panel;
                    panel.certified =
                        parse_certified_curve(read_text_file(cert_path), mp.nominal);
                    panel.roi = roi;
                    panel.stats = std::move(stats.statistic);
                    panel.sat_mask = sat;
                    for (int b = 0; b < panel.stats.bands; ++b)
                        for (int s = 0; s < panel.stats.samples; ++s)
                            if (is_no_data(panel.stats.at(s, b))) panel.sat_mask.set(s, b, true);
                    built.push_back(std::move(panel));
                }

                const DarkFrame zero = zero_dark(state.current.samples, state.current.bands);
                if (mode == "single") {
                    state.current =
                        single_target_reflectance(state.current, zero, built.front(), threads);
                    sr.note = "single target, statistic " + to_string(stat);
                } else {
                    LinearCalibration cal =
                        fit_multi_target(built, state.current.wavelengths, threads);
                    sr.warnings.insert(sr.warnings.end(), cal.warnings.begin(),
                                        cal.warnings.end());
                    state.current = apply_linear_calibration(state.current, zero, cal, threads);
                    sr.note = std::to_string(built.size()) + " targets, statistic " +
                              to_string(stat);
                    if (step.params.contains("save_calibration"))
                        save_linear_calibration(
                            cal,
                            manifest.output_dir /
                                step.params.at("save_calibration").get<std::string>(),
                            {});
                }
            } else if (step.op == "geocorrect") {
                const auto p = manifest.resolve(*manifest.sensor_model);
                const SensorModel model = parse_sensor_model(read_text_file(p));
                note_input(p);
                const int out_samples =
                    step.params.value("out_samples", state.current.samples);
                state.current =
                    resample_across_track(state.current, model, out_samples, threads);
                sr.note = "resampled to " + std::to_string(out_samples) + " samples";
            } else if (step.op == "rescale") {
                const double factor = step.params.at("factor").get<double>();
                state.current = rescale_aspect(state.current, factor, threads);
                sr.note = "aspect factor " + std::to_string(factor);
            } else if (step.op == "coregister") {
                const auto p = manifest.resolve(*manifest.secondary);
                const SpectralCube secondary = load_cube(p);
                note_input(p);
                CoregisterOptions opts;
                opts.threads = threads;
                if (step.params.contains("scale"))
                    opts.scale = step.params.at("scale").get<double>();
                CoregisterResult res = coregister(state.current, secondary, opts);
                state.current = std::move(res.merged);
                std::ostringstream oss;
                oss << "scale " << res.scale << ", shift (" << res.translation.dx << ", "
                    << res.translation.dy << "), confidence " << res.translation.confidence;
                sr.note = oss.str();
            } else if (step.op == "mosaic") {
                StripLayout layout;
                layout.overlap_threshold = step.params.value("overlap_threshold", 16);
                layout.max_correction = step.params.value("max_correction", 10.0);
                layout.fallback_to_nominal = step.params.value("fallback_to_nominal", false);
                if (step.params.contains("reference_band"))
                    layout.reference_band = step.params.at("reference_band").get<int>();
                for (const auto& strip : manifest.strips) {
                    const auto p = manifest.resolve(strip.scan);
                    StripPlacement placement;
                    placement.cube = load_cube(p);
                    note_input(p);
                    placement.x = strip.x;
                    placement.y = strip.y;
                    layout.strips.push_back(std::move(placement));
                }
                MosaicResult res = mosaic(layout, threads);
                sr.warnings = res.warnings;
                state.current = std::move(res.mosaic);
                state.has_current = true;
                sr.note = std::to_string(layout.strips.size()) + " strips";
            } else if (step.op == "export") {
                if (step.params.contains("clamp")) {
                    const auto clamp = step.params.at("clamp");
                    state.current =
                        clamp_reflectance(state.current, clamp.at(0).get<double>(),
                                          clamp.at(1).get<double>());
                }
                save_current(manifest.output_dir / step.params.at("path").get<std::string>(),
                             step.params);
            }

            if (step.op != "export" && step.params.contains("save") && step.op != "dark" &&
                step.op != "flatfield") {
                save_current(manifest.output_dir / step.params.at("save").get<std::string>(),
                             step.params);
            }

            const auto t1 = std::chrono::steady_clock::now();
            sr.milliseconds = std::chrono::duration<double, std::milli>(t1 - t0).count();
            if (manifest.log_level != "quiet" && manifest.log_level != "error") {
                std::cerr << "[hscal] " << sr.op << " (" << sr.milliseconds << " ms)";
                if (!sr.note.empty()) std::cerr << " " << sr.note;
                std::cerr << "\n";
                for (const auto& w : sr.warnings) std::cerr << "[hscal] warning: " << w << "\n";
            }
            report.steps.push_back(std::move(sr));
        }
        report.ok = true;
    } catch (const std::exception& e) {
        report.ok = false;
        report.error = e.what();
        finalize();
        throw;
    }

    finalize();
    return report;
}

}  // namespace hscal
