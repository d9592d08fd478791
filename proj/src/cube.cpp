#include "hscal/cube.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hscal {

void SpectralCube::validate() const {
    if (samples <= 0 || lines <= 0 || bands <= 0)
        throw DimensionError("cube dimensions must be positive, got " +
                             std::to_string(samples) + "x" + std::to_string(lines) + "x" +
                             std::to_string(bands));
    if (static_cast<int>(wavelengths.size()) != bands)
        throw SchemaError("wavelength count " + std::to_string(wavelengths.size()) +
                          " does not match band count " + std::to_string(bands));
    for (int b = 1; b < bands; ++b)
        if (!(wavelengths[b] > wavelengths[b - 1]))
            throw SchemaError("wavelengths must be strictly increasing (band " +
                              std::to_string(b) + ")");
    if (data.size() != static_cast<std::size_t>(samples) * lines * bands)
        throw DimensionError("data size does not match cube dimensions");
    if (units == Units::ReflectanceFactor) {
        for (double d : data)
            if (!std::isfinite(d))
                throw RangeError("reflectance cube contains non-finite values");
    }
}

void SpectralCube::check_roi(const Roi& roi) const {
    if (roi.width <= 0 || roi.height <= 0 || roi.sample0 < 0 || roi.line0 < 0 ||
        roi.sample_end() > samples || roi.line_end() > lines) {
        std::ostringstream oss;
        oss << "roi " << roi.sample0 << "," << roi.line0 << "," << roi.width << ","
            << roi.height << " outside cube " << samples << "x" << lines;
        throw DimensionError(oss.str());
    }
}

std::size_t CubeMask::count() const {
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
    return out;
}

Roi parse_roi(const std::string& text) {
    std::istringstream iss(text);
    Roi roi;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(iss >> roi.sample0 >> c1 >> roi.line0 >> c2 >> roi.width >> c3 >> roi.height) ||
        c1 != ',' || c2 != ',' || c3 != ',')
        throw FormatError("roi must be 'sample0,line0,width,height', got '" + text + "'");
    if (roi.width <= 0 || roi.height <= 0)
        throw RangeError("roi width and height must be positive");
    return roi;
}

}  // namespace hscal
