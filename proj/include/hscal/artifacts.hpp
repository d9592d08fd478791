#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "hscal/detector_map.hpp"
#include "hscal/geometric.hpp"
#include "hscal/radiometric.hpp"

namespace hscal {

// Calibration artifacts persist as ENVI cubes with lines = 1 (the detector
// grid as bands x samples planes) plus a sidecar text file recording
// provenance: `<path>.meta.txt`, one `key: value` per line.

void save_detector_map(const DetectorMap& map, const std::filesystem::path& header_path,
                       const std::map<std::string, std::string>& provenance);
DetectorMap load_detector_map(const std::filesystem::path& header_path);
std::map<std::string, std::string> load_sidecar(const std::filesystem::path& header_path);

void save_dark_frame(const DarkFrame& dark, const std::filesystem::path& header_path,
                     std::map<std::string, std::string> provenance = {});
DarkFrame load_dark_frame(const std::filesystem::path& header_path);

void save_flat_field(const FlatField& flat, const std::filesystem::path& header_path,
                     std::map<std::string, std::string> provenance = {});
FlatField load_flat_field(const std::filesystem::path& header_path);

// gain and offset planes side by side (two cubes: <stem>_gain.hdr, <stem>_offset.hdr)
void save_linear_calibration(const LinearCalibration& cal, const std::filesystem::path& stem,
                             std::map<std::string, std::string> provenance = {});
LinearCalibration load_linear_calibration(const std::filesystem::path& stem);

// FNV-1a 64-bit content hash, for run reports.
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hash_file_hex(const std::filesystem::path& path);

}  // namespace hscal
