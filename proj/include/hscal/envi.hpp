#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hscal/cube.hpp"

namespace hscal {

// ENVI numeric data-type codes (the subset this toolchain supports).
enum class EnviDataType : int {
    U8 = 1,
    I16 = 2,
    F32 = 4,
    U16 = 12,
};

enum class Interleave { BSQ, BIL, BIP };

int bytes_per_element(EnviDataType t);
double default_code_max(EnviDataType t);  // 0 for float
std::string to_string(Interleave il);
std::string to_string(EnviDataType t);
Interleave parse_interleave(const std::string& text);

// Parsed ENVI header: an ordered key/value list. Keys are stored lower-case;
// unrecognized keys are kept verbatim so vendor metadata survives a round
// trip. Brace-delimited list values are stored with their braces.
class EnviHeader {
public:
    static EnviHeader parse(const std::string& text);

    // Required fields (throw SchemaError when absent or malformed).
    int samples() const;
    int lines() const;
    int bands() const;
    Interleave interleave() const;
    EnviDataType data_type() const;
    int byte_order() const;  // 0 little, 1 big

    long header_offset() const;  // defaults to 0
    std::optional<std::vector<double>> wavelengths() const;
    std::optional<double> number(const std::string& key) const;
    std::optional<std::string> value(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    void set_number(const std::string& key, double value);
    void set_list(const std::string& key, const std::vector<double>& values);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string to_text() const;

    // Validates required keys, enumerations and the wavelength-count rule.
    void validate() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Decodes a binary payload described by `header` into the canonical
// band-sequential cube. All three interleaves and both byte orders are
// supported; integer reflectance files are unscaled via the header's
// `reflectance scale factor`.
SpectralCube read_cube(const EnviHeader& header, const std::vector<std::uint8_t>& blob);

struct EncodedCube {
    EnviHeader header;
    std::vector<std::uint8_t> blob;
};

// Encodes a cube. Integer targets reject out-of-range values rather than
// clipping. Reflectance cubes written to integer types are scaled by
// `reflectance_scale` (recorded in the header).
EncodedCube write_cube(const SpectralCube& cube, Interleave interleave, EnviDataType data_type,
                       int byte_order = 0, double reflectance_scale = 10000.0);

// File helpers: `x.hdr` alongside data file `x.img` (on load, `x.raw`,
// `x.dat`, `x.bsq` and bare `x` are also tried).
SpectralCube load_cube(const std::filesystem::path& header_path);
void save_cube(const SpectralCube& cube, const std::filesystem::path& header_path,
               Interleave interleave = Interleave::BSQ,
               EnviDataType data_type = EnviDataType::F32, int byte_order = 0);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hscal
