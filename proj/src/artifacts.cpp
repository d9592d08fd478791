#include "hscal/artifacts.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "hscal/envi.hpp"

namespace hscal {

namespace {

SpectralCube map_to_cube(const DetectorMap& map) {
    SpectralCube cube(map.samples, 1, map.bands, linspace(1.0, map.bands, map.bands));
    for (int b = 0; b < map.bands; ++b)
        for (int s = 0; s < map.samples; ++s) cube.at(0, s, b) = map.at(s, b);
    return cube;
}

DetectorMap cube_to_map(const SpectralCube& cube) {
    if (cube.lines != 1)
        throw SchemaError("calibration artifact cube must have exactly 1 line");
    DetectorMap map(cube.samples, cube.bands);
    for (int b = 0; b < cube.bands; ++b)
        for (int s = 0; s < cube.samples; ++s) map.at(s, b) = cube.at(0, s, b);
    return map;
}

std::filesystem::path sidecar_path(const std::filesystem::path& header_path) {
    std::filesystem::path p = header_path;
    p += ".meta.txt";
    return p;
}

void save_sidecar(const std::filesystem::path& header_path,
                  const std::map<std::string, std::string>& provenance) {
    std::ostringstream oss;
    for (const auto& [k, v] : provenance) oss << k << ": " << v << "\n";
    write_text_file(sidecar_path(header_path), oss.str());
}

}  // namespace

void save_detector_map(const DetectorMap& map, const std::filesystem::path& header_path,
                       const std::map<std::string, std::string>& provenance) {
    save_cube(map_to_cube(map), header_path, Interleave::BSQ, EnviDataType::F32);
    save_sidecar(header_path, provenance);
}

DetectorMap load_detector_map(const std::filesystem::path& header_path) {
    return cube_to_map(load_cube(header_path));
}

std::map<std::string, std::string> load_sidecar(const std::filesystem::path& header_path) {
    std::map<std::string, std::string> out;
    const std::filesystem::path p = sidecar_path(header_path);
    if (!std::filesystem::exists(p)) return out;
    std::istringstream iss(read_text_file(p));
    std::string line;
    while (std::getline(iss, line)) {
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        out[key] = value;
    }
    return out;
}

void save_dark_frame(const DarkFrame& dark, const std::filesystem::path& header_path,
                     std::map<std::string, std::string> provenance) {
    provenance["artifact"] = "dark frame";
    provenance["source lines"] = std::to_string(dark.source_lines);
    if (!dark.integration_tag.empty()) provenance["integration tag"] = dark.integration_tag;
    save_detector_map(dark.offsets, header_path, provenance);
}

DarkFrame load_dark_frame(const std::filesystem::path& header_path) {
    DarkFrame dark;
    dark.offsets = load_detector_map(header_path);
    const auto meta = load_sidecar(header_path);
    if (auto it = meta.find("source lines"); it != meta.end())
        dark.source_lines = std::stoi(it->second);
    if (auto it = meta.find("integration tag"); it != meta.end())
        dark.integration_tag = it->second;
    return dark;
}

void save_flat_field(const FlatField& flat, const std::filesystem::path& header_path,
                     std::map<std::string, std::string> provenance) {
    provenance["artifact"] = "flat field";
    save_detector_map(flat.gains, header_path, provenance);
}

FlatField load_flat_field(const std::filesystem::path& header_path) {
    FlatField flat;
    flat.gains = load_detector_map(header_path);
    return flat;
}

void save_linear_calibration(const LinearCalibration& cal, const std::filesystem::path& stem,
                             std::map<std::string, std::string> provenance) {
    provenance["artifact"] = "linear calibration";
    std::filesystem::path gain = stem;
    gain += "_gain.hdr";
    std::filesystem::path offset = stem;
    offset += "_offset.hdr";
    save_detector_map(cal.gain, gain, provenance);
    save_detector_map(cal.offset, offset, provenance);
}

LinearCalibration load_linear_calibration(const std::filesystem::path& stem) {
    LinearCalibration cal;
    std::filesystem::path gain = stem;
    gain += "_gain.hdr";
    std::filesystem::path offset = stem;
    offset += "_offset.hdr";
    cal.gain = load_detector_map(gain);
    cal.offset = load_detector_map(offset);
    cal.n_targets_used = DetectorCountMap(cal.gain.samples, cal.gain.bands, 0);
    return cal;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file for hashing: " + path.string());
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    char buffer[65536];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buffer[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string hash_file_hex(const std::filesystem::path& path) {
    std::ostringstream oss;
    oss << std::hex << std::setfill('0') << std::setw(16) << hash_file(path);
    return oss.str();
}

}  // namespace hscal
