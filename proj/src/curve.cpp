#include "hscal/curve.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
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

struct CsvRows {
    std::vector<std::pair<double, double>> rows;
};

CsvRows parse_two_column_csv(const std::string& text, const std::string& expected_header) {
    std::istringstream iss(text);
    std::string line;
    bool header_seen = false;
    CsvRows out;
    int lineno = 0;
    while (std::getline(iss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header_seen) {
            std::string normalized = t;
            normalized.erase(std::remove_if(normalized.begin(), normalized.end(),
                                            [](unsigned char c) { return std::isspace(c); }),
                             normalized.end());
            if (normalized != expected_header)
                throw FormatError("expected CSV header '" + expected_header + "', got '" + t +
                                  "'");
            header_seen = true;
            continue;
        }
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos)
            throw FormatError("line " + std::to_string(lineno) + ": expected two columns");
        try {
            const double a = std::stod(trim(t.substr(0, comma)));
            const double b = std::stod(trim(t.substr(comma + 1)));
            out.rows.emplace_back(a, b);
        } catch (const std::exception&) {
            throw FormatError("line " + std::to_string(lineno) + ": bad number in '" + t + "'");
        }
    }
    if (!header_seen) throw FormatError("empty CSV: missing header '" + expected_header + "'");
    return out;
}

}  // namespace

void SpectralCurve::validate() const {
    if (wavelengths.size() != values.size())
        throw SchemaError("curve wavelength/value count mismatch");
    if (wavelengths.size() < 2) throw SchemaError("curve needs at least 2 points");
    for (std::size_t i = 1; i < wavelengths.size(); ++i)
        if (!(wavelengths[i] > wavelengths[i - 1]))
            throw FormatError("curve wavelengths must be strictly increasing");
    const bool fraction = kind == CurveKind::QuantumEfficiency || kind == CurveKind::Transmission;
    for (double v : values) {
        if (!std::isfinite(v)) throw RangeError("curve value not finite");
        if (fraction && (v < 0.0 || v > 1.0))
            throw RangeError("fractional curve value " + std::to_string(v) + " outside [0, 1]");
        if (kind == CurveKind::Reflectance && (v <= 0.0 || v > 1.1))
            throw RangeError("reflectance value " + std::to_string(v) + " outside (0, 1.1]");
    }
}

double SpectralCurve::value_at(double wavelength_nm) const {
    if (wavelength_nm < wavelengths.front() || wavelength_nm > wavelengths.back())
        throw DomainError("wavelength " + std::to_string(wavelength_nm) +
                          " nm outside curve domain [" + std::to_string(wavelengths.front()) +
                          ", " + std::to_string(wavelengths.back()) + "]");
    const auto it = std::lower_bound(wavelengths.begin(), wavelengths.end(), wavelength_nm);
    const std::size_t hi = static_cast<std::size_t>(it - wavelengths.begin());
    if (hi == 0) return values.front();
    if (wavelengths[hi] == wavelength_nm) return values[hi];
    const std::size_t lo = hi - 1;
    const double t = (wavelength_nm - wavelengths[lo]) / (wavelengths[hi] - wavelengths[lo]);
    return values[lo] + t * (values[hi] - values[lo]);
}

std::vector<double> SpectralCurve::resample(const std::vector<double>& targets) const {
    std::vector<double> out;
    out.reserve(targets.size());
    for (double t : targets) out.push_back(value_at(t));
    return out;
}

double SpectralCurve::peak_value() const {
    return *std::max_element(values.begin(), values.end());
}

CertifiedCurve parse_certified_curve(const std::string& csv_text, double nominal_reflectance) {
    const CsvRows rows = parse_two_column_csv(csv_text, "wavelength_nm,reflectance");
    CertifiedCurve cc;
    cc.nominal_reflectance = nominal_reflectance;
    cc.curve.kind = CurveKind::Reflectance;
    for (const auto& [wl, r] : rows.rows) {
        cc.curve.wavelengths.push_back(wl);
        cc.curve.values.push_back(r);
    }
    cc.curve.validate();
    return cc;
}

SpectralCurve parse_curve_csv(const std::string& csv_text, CurveKind kind) {
    const CsvRows rows = parse_two_column_csv(csv_text, "wavelength_nm,value");
    SpectralCurve c;
    c.kind = kind;
    for (const auto& [wl, v] : rows.rows) {
        c.wavelengths.push_back(wl);
        c.values.push_back(v);
    }
    c.validate();
    return c;
}

std::string curve_to_csv(const SpectralCurve& curve, const std::string& value_column) {
    std::ostringstream oss;
    oss << "wavelength_nm," << value_column << "\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        oss << std::setprecision(12) << curve.wavelengths[i] << "," << curve.values[i] << "\n";
    return oss.str();
}

}  // namespace hscal
