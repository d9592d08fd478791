#include "hscal/envi.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hscal {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// collapse internal whitespace runs to single spaces
std::string normalize_key(const std::string& raw) {
    std::string out;
    bool in_space = false;
    for (char c : trim(raw)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out += ' ';
            in_space = false;
            out += c;
        }
    }
    return to_lower(out);
}

std::vector<double> parse_number_list(const std::string& braced, const std::string& key) {
    std::string inner = trim(braced);
    if (inner.size() >= 2 && inner.front() == '{' && inner.back() == '}')
        inner = inner.substr(1, inner.size() - 2);
    std::vector<double> out;
    std::string item;
    std::istringstream iss(inner);
    while (std::getline(iss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw FormatError("bad numeric item '" + item + "' in header list '" + key + "'");
        }
    }
    return out;
}

const char* kRequiredKeys[] = {"samples", "lines", "bands", "interleave", "data type",
                               "byte order"};

// keys the cube model consumes; everything else round-trips via metadata
bool is_recognized_key(const std::string& key) {
    static const char* known[] = {"samples",       "lines",
                                  "bands",         "interleave",
                                  "data type",     "byte order",
                                  "header offset", "wavelength",
                                  "wavelength units", "data units",
                                  "reflectance scale factor", "code max",
                                  "data ignore value"};
    for (const char* k : known)
        if (key == k) return true;
    return false;
}

}  // namespace

int bytes_per_element(EnviDataType t) {
    switch (t) {
        case EnviDataType::U8: return 1;
        case EnviDataType::I16: return 2;
        case EnviDataType::U16: return 2;
        case EnviDataType::F32: return 4;
    }
    throw UnsupportedFormatError("unknown data type");
}

double default_code_max(EnviDataType t) {
    switch (t) {
        case EnviDataType::U8: return 255.0;
        case EnviDataType::I16: return 32767.0;
        case EnviDataType::U16: return 65535.0;
        case EnviDataType::F32: return 0.0;
    }
    return 0.0;
}

std::string to_string(Interleave il) {
    switch (il) {
        case Interleave::BSQ: return "bsq";
        case Interleave::BIL: return "bil";
        case Interleave::BIP: return "bip";
    }
    return "bsq";
}

std::string to_string(EnviDataType t) { return std::to_string(static_cast<int>(t)); }

Interleave parse_interleave(const std::string& text) {
    const std::string s = to_lower(trim(text));
    if (s == "bsq") return Interleave::BSQ;
    if (s == "bil") return Interleave::BIL;
    if (s == "bip") return Interleave::BIP;
    throw UnsupportedFormatError("unsupported interleave '" + text + "'");
}

EnviHeader EnviHeader::parse(const std::string& text) {
    std::istringstream iss(text);
    std::string line;

    // magic token on the first non-empty line
    bool magic_seen = false;
    while (std::getline(iss, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t == "ENVI") {
            magic_seen = true;
            break;
        }
        throw FormatError("not an ENVI header: expected leading 'ENVI' token");
    }
    if (!magic_seen) throw FormatError("not an ENVI header: expected leading 'ENVI' token");

    EnviHeader h;
    while (std::getline(iss, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == ';') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw FormatError("malformed header line (no '='): '" + t + "'");
        const std::string key = normalize_key(t.substr(0, eq));
        if (key.empty()) throw FormatError("malformed header line (empty key): '" + t + "'");
        std::string value = trim(t.substr(eq + 1));
        if (!value.empty() && value[0] == '{') {
            // brace lists may span lines; join until the closing brace
            while (value.find('}') == std::string::npos) {
                std::string cont;
                if (!std::getline(iss, cont))
                    throw FormatError("unterminated '{' list for header key '" + key + "'");
                value += " " + trim(cont);
            }
        }
        h.entries_.emplace_back(key, value);
    }
    h.validate();
    return h;
}

void EnviHeader::validate() const {
    for (const char* k : kRequiredKeys)
        if (!value(k)) throw SchemaError(std::string("missing required header key '") + k + "'");

    if (samples() <= 0 || lines() <= 0 || bands() <= 0)
        throw SchemaError("samples, lines and bands must be positive");

    interleave();
    data_type();
    byte_order();

    if (auto wl = wavelengths()) {
        if (static_cast<int>(wl->size()) != bands())
            throw SchemaError("wavelength list has " + std::to_string(wl->size()) +
                              " entries but bands = " + std::to_string(bands()));
    }
}

std::optional<std::string> EnviHeader::value(const std::string& key) const {
    const std::string k = normalize_key(key);
    for (const auto& [ek, ev] : entries_)
        if (ek == k) return ev;
    return std::nullopt;
}

std::optional<double> EnviHeader::number(const std::string& key) const {
    auto v = value(key);
    if (!v) return std::nullopt;
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        throw SchemaError("header key '" + key + "' is not numeric: '" + *v + "'");
    }
}

namespace {
int required_int(const EnviHeader& h, const char* key) {
    auto n = h.number(key);
    if (!n) throw SchemaError(std::string("missing required header key '") + key + "'");
    return static_cast<int>(*n);
}
}  // namespace

int EnviHeader::samples() const { return required_int(*this, "samples"); }
int EnviHeader::lines() const { return required_int(*this, "lines"); }
int EnviHeader::bands() const { return required_int(*this, "bands"); }

Interleave EnviHeader::interleave() const {
    auto v = value("interleave");
    if (!v) throw SchemaError("missing required header key 'interleave'");
    return parse_interleave(*v);
}

EnviDataType EnviHeader::data_type() const {
    const int code = required_int(*this, "data type");
    switch (code) {
        case 1: return EnviDataType::U8;
        case 2: return EnviDataType::I16;
        case 4: return EnviDataType::F32;
        case 12: return EnviDataType::U16;
        default:
            throw UnsupportedFormatError("unsupported data type code " + std::to_string(code));
    }
}

int EnviHeader::byte_order() const {
    const int order = required_int(*this, "byte order");
    if (order != 0 && order != 1)
        throw UnsupportedFormatError("unsupported byte order " + std::to_string(order));
    return order;
}

long EnviHeader::header_offset() const {
    auto n = number("header offset");
    return n ? static_cast<long>(*n) : 0L;
}

std::optional<std::vector<double>> EnviHeader::wavelengths() const {
    auto v = value("wavelength");
    if (!v) return std::nullopt;
    return parse_number_list(*v, "wavelength");
}

void EnviHeader::set(const std::string& key, const std::string& val) {
    const std::string k = normalize_key(key);
    for (auto& [ek, ev] : entries_) {
        if (ek == k) {
            ev = val;
            return;
        }
    }
    entries_.emplace_back(k, val);
}

void EnviHeader::set_number(const std::string& key, double value) {
    std::ostringstream oss;
    if (value == std::floor(value) && std::fabs(value) < 1e15)
        oss << static_cast<long long>(value);
    else
        oss << std::setprecision(17) << value;
    set(key, oss.str());
}

void EnviHeader::set_list(const std::string& key, const std::vector<double>& values) {
    std::ostringstream oss;
    oss << "{ ";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) oss << " , ";
        oss << std::setprecision(17) << values[i];
    }
    oss << " }";
    set(key, oss.str());
}

std::string EnviHeader::to_text() const {
    std::ostringstream oss;
    oss << "ENVI\n";
    for (const auto& [k, v] : entries_) oss << k << " = " << v << "\n";
    return oss.str();
}

namespace {

std::uint64_t load_element(const std::uint8_t* p, int nbytes, int byte_order) {
    std::uint64_t raw = 0;
    if (byte_order == 0) {
        for (int i = nbytes - 1; i >= 0; --i) raw = (raw << 8) | p[i];
    } else {
        for (int i = 0; i < nbytes; ++i) raw = (raw << 8) | p[i];
    }
    return raw;
}

void store_element(std::uint8_t* p, std::uint64_t raw, int nbytes, int byte_order) {
    if (byte_order == 0) {
        for (int i = 0; i < nbytes; ++i) p[i] = static_cast<std::uint8_t>((raw >> (8 * i)) & 0xFF);
    } else {
        for (int i = 0; i < nbytes; ++i)
            p[i] = static_cast<std::uint8_t>((raw >> (8 * (nbytes - 1 - i))) & 0xFF);
    }
}

double decode_value(std::uint64_t raw, EnviDataType t) {
    switch (t) {
        case EnviDataType::U8: return static_cast<double>(raw & 0xFF);
        case EnviDataType::U16: return static_cast<double>(raw & 0xFFFF);
        case EnviDataType::I16: return static_cast<double>(static_cast<std::int16_t>(raw & 0xFFFF));
        case EnviDataType::F32: return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(raw)));
    }
    return 0.0;
}

std::uint64_t encode_value(double v, EnviDataType t) {
    switch (t) {
        case EnviDataType::U8: {
            const double r = std::nearbyint(v);
            if (!(r >= 0.0 && r <= 255.0))
                throw RangeError("value " + std::to_string(v) + " out of range for unsigned 8-bit");
            return static_cast<std::uint64_t>(r);
        }
        case EnviDataType::U16: {
            const double r = std::nearbyint(v);
            if (!(r >= 0.0 && r <= 65535.0))
                throw RangeError("value " + std::to_string(v) + " out of range for unsigned 16-bit");
            return static_cast<std::uint64_t>(r);
        }
        case EnviDataType::I16: {
            const double r = std::nearbyint(v);
            if (!(r >= -32768.0 && r <= 32767.0))
                throw RangeError("value " + std::to_string(v) + " out of range for signed 16-bit");
            return static_cast<std::uint64_t>(static_cast<std::uint16_t>(static_cast<std::int16_t>(r)));
        }
        case EnviDataType::F32: {
            return std::bit_cast<std::uint32_t>(static_cast<float>(v));
        }
    }
    return 0;
}

// flat element index for a given interleave
std::size_t interleave_index(Interleave il, int line, int sample, int band, int samples,
                             int lines, int bands) {
    switch (il) {
        case Interleave::BSQ:
            return (static_cast<std::size_t>(band) * lines + line) * samples + sample;
        case Interleave::BIL:
            return (static_cast<std::size_t>(line) * bands + band) * samples + sample;
        case Interleave::BIP:
            return (static_cast<std::size_t>(line) * samples + sample) * bands + band;
    }
    return 0;
}

}  // namespace

SpectralCube read_cube(const EnviHeader& header, const std::vector<std::uint8_t>& blob) {
    header.validate();
    const int samples = header.samples();
    const int lines = header.lines();
    const int bands = header.bands();
    const EnviDataType dtype = header.data_type();
    const Interleave il = header.interleave();
    const int order = header.byte_order();
    const long offset = header.header_offset();
    const int nbytes = bytes_per_element(dtype);

    const std::size_t need = static_cast<std::size_t>(offset) +
                             static_cast<std::size_t>(samples) * lines * bands * nbytes;
    if (blob.size() < need)
        throw TruncationError("binary payload has " + std::to_string(blob.size()) +
                              " bytes, header requires " + std::to_string(need));

    std::vector<double> wl;
    if (auto w = header.wavelengths()) {
        wl = *w;
    } else {
        wl = linspace(1.0, static_cast<double>(bands), bands);
    }

    SpectralCube cube(samples, lines, bands, std::move(wl));

    const std::uint8_t* base = blob.data() + offset;
    for (int band = 0; band < bands; ++band) {
        for (int line = 0; line < lines; ++line) {
            for (int sample = 0; sample < samples; ++sample) {
                const std::size_t src =
                    interleave_index(il, line, sample, band, samples, lines, bands);
                const std::uint64_t raw = load_element(base + src * nbytes, nbytes, order);
                cube.at(line, sample, band) = decode_value(raw, dtype);
            }
        }
    }

    // units and scaling
    const auto units_tag = header.value("data units");
    const auto refl_scale = header.number("reflectance scale factor");
    const bool is_reflectance =
        (units_tag && to_lower(*units_tag) == "reflectance factor") ||
        (refl_scale && dtype != EnviDataType::F32);
    if (is_reflectance) {
        cube.units = Units::ReflectanceFactor;
        if (refl_scale && dtype != EnviDataType::F32 && *refl_scale > 0) {
            const double inv = *refl_scale;
            for (double& d : cube.data) d /= inv;
        }
    }

    if (auto cm = header.number("code max"))
        cube.code_max = *cm;
    else
        cube.code_max = default_code_max(dtype);

    for (const auto& [k, v] : header.entries())
        if (!is_recognized_key(k)) cube.metadata[k] = v;

    return cube;
}

EncodedCube write_cube(const SpectralCube& cube, Interleave interleave, EnviDataType data_type,
                       int byte_order, double reflectance_scale) {
    cube.validate();
    if (byte_order != 0 && byte_order != 1)
        throw UnsupportedFormatError("byte order must be 0 or 1");

    const bool scaled = cube.units == Units::ReflectanceFactor &&
                        data_type != EnviDataType::F32;
    const double scale = scaled ? reflectance_scale : 1.0;
    if (scaled && !(reflectance_scale > 0))
        throw ParameterError("reflectance scale factor must be positive");

    const int nbytes = bytes_per_element(data_type);
    std::vector<std::uint8_t> blob(cube.size() * nbytes);

    for (int band = 0; band < cube.bands; ++band) {
        for (int line = 0; line < cube.lines; ++line) {
            for (int sample = 0; sample < cube.samples; ++sample) {
                const double v = cube.at(line, sample, band) * scale;
                const std::size_t dst = interleave_index(interleave, line, sample, band,
                                                         cube.samples, cube.lines, cube.bands);
                store_element(blob.data() + dst * nbytes, encode_value(v, data_type), nbytes,
                              byte_order);
            }
        }
    }

    EnviHeader h;
    h.set_number("samples", cube.samples);
    h.set_number("lines", cube.lines);
    h.set_number("bands", cube.bands);
    h.set_number("header offset", 0);
    h.set_number("data type", static_cast<int>(data_type));
    h.set("interleave", to_string(interleave));
    h.set_number("byte order", byte_order);
    h.set_list("wavelength", cube.wavelengths);
    h.set("wavelength units", "Nanometers");
    if (cube.units == Units::ReflectanceFactor) {
        h.set("data units", "reflectance factor");
        if (scaled) h.set_number("reflectance scale factor", reflectance_scale);
    } else {
        h.set("data units", "raw counts");
    }
    if (cube.code_max > 0 && cube.code_max != default_code_max(data_type))
        h.set_number("code max", cube.code_max);
    for (const auto& [k, v] : cube.metadata) h.set(k, v);
    return {std::move(h), std::move(blob)};
}

namespace {
std::filesystem::path data_path_for(const std::filesystem::path& header_path) {
    std::filesystem::path stem = header_path;
    stem.replace_extension();
    for (const char* ext : {".img", ".raw", ".dat", ".bsq"}) {
        std::filesystem::path candidate = stem;
        candidate += ext;
        if (std::filesystem::exists(candidate)) return candidate;
    }
    if (std::filesystem::exists(stem)) return stem;
    throw FormatError("no data file found alongside header " + header_path.string());
}
}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file " + path.string());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write file " + path.string());
    out << text;
}

SpectralCube load_cube(const std::filesystem::path& header_path) {
    const EnviHeader header = EnviHeader::parse(read_text_file(header_path));
    const std::filesystem::path data_path = data_path_for(header_path);
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw FormatError("cannot open data file " + data_path.string());
    std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return read_cube(header, blob);
}

void save_cube(const SpectralCube& cube, const std::filesystem::path& header_path,
               Interleave interleave, EnviDataType data_type, int byte_order) {
    EncodedCube enc = write_cube(cube, interleave, data_type, byte_order);
    std::filesystem::path data_path = header_path;
    data_path.replace_extension(".img");
    write_text_file(header_path, enc.header.to_text());
    std::ofstream out(data_path, std::ios::binary);
    if (!out) throw FormatError("cannot write data file " + data_path.string());
    out.write(reinterpret_cast<const char*>(enc.blob.data()),
              static_cast<std::streamsize>(enc.blob.size()));
}

}  // namespace hscal
