#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hscal/cube.hpp"

namespace hscal {

// One pipeline step: an operation name plus its parameters, verbatim from
// the manifest JSON.
struct PipelineStep {
    std::string op;
    nlohmann::json params;
};

struct ManifestPanel {
    std::string name;
    std::string scan;       // ENVI header path
    std::string roi;        // "sample0,line0,width,height"
    std::string certified;  // CSV path
    double nominal = 0.0;
};

struct ManifestStrip {
    std::string scan;
    double x = 0.0;
    double y = 0.0;
};

// Declarative description of a full calibration run. Paths are resolved
// relative to the manifest file's directory.
struct CalibrationManifest {
    int version = 1;
    int threads = 1;
    std::uint64_t seed = 0;
    std::string log_level = "info";
    std::filesystem::path base_dir;
    std::filesystem::path output_dir;

    std::optional<std::string> scan;
    std::optional<std::string> dark_scan;
    std::optional<std::string> flat_scan;
    std::optional<std::string> sensor_model;
    std::optional<std::string> secondary;  // cube to co-register onto the scan
    std::vector<ManifestPanel> panels;
    std::vector<ManifestStrip> strips;

    std::vector<PipelineStep> steps;

    static CalibrationManifest parse_file(const std::filesystem::path& path);
    static CalibrationManifest parse_json(const nlohmann::json& j,
                                          const std::filesystem::path& base_dir);

    // Structural and ordering validation; throws ValidationError with the
    // offending step index. Checks that every referenced file exists.
    void validate() const;

    std::filesystem::path resolve(const std::string& relative) const;
};

struct StepReport {
    std::string op;
    double milliseconds = 0.0;
    std::string note;
    std::vector<std::string> warnings;
};

struct RunReport {
    bool ok = false;
    std::string error;
    std::vector<StepReport> steps;
    std::map<std::string, std::string> input_hashes;  // path -> fnv1a64
    std::vector<std::string> outputs;
    int threads = 1;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

// Executes the manifest. Artifacts land in output_dir; the run report is
// written there as report.json and report.txt. Throws ValidationError before
// touching any data if the manifest is invalid; step failures propagate
// after partial artifacts are flushed.
RunReport run_pipeline(const CalibrationManifest& manifest,
                       std::optional<int> thread_override = std::nullopt);

}  // namespace hscal
