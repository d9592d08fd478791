#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "hscal/curve.hpp"
#include "hscal/envi.hpp"
#include "hscal/rng.hpp"

using namespace hscal;

namespace {

// 2x2x2 fixture with distinct values v(line, sample, band)
SpectralCube fixture_cube_222() {
    SpectralCube cube(2, 2, 2, {500.0, 600.0});
    cube.at(0, 0, 0) = 1;
    cube.at(0, 1, 0) = 2;
    cube.at(1, 0, 0) = 3;
    cube.at(1, 1, 0) = 4;
    cube.at(0, 0, 1) = 5;
    cube.at(0, 1, 1) = 6;
    cube.at(1, 0, 1) = 7;
    cube.at(1, 1, 1) = 8;
    cube.code_max = 255;
    return cube;
}

EnviHeader header_222(const std::string& interleave, int data_type, int byte_order) {
    std::string text = "ENVI\n"
                       "samples = 2\n"
                       "lines = 2\n"
                       "bands = 2\n"
                       "data type = " + std::to_string(data_type) + "\n"
                       "interleave = " + interleave + "\n"
                       "byte order = " + std::to_string(byte_order) + "\n";
    return EnviHeader::parse(text);
}

}  // namespace

TEST_CASE("header: minimal six required fields") {
    const EnviHeader h = EnviHeader::parse(
        "ENVI\nsamples = 3\nlines = 2\nbands = 1\ninterleave = bsq\n"
        "data type = 12\nbyte order = 0\n");
    CHECK(h.samples() == 3);
    CHECK(h.lines() == 2);
    CHECK(h.bands() == 1);
    CHECK(h.interleave() == Interleave::BSQ);
    CHECK(h.data_type() == EnviDataType::U16);
    CHECK(h.byte_order() == 0);
    CHECK(h.header_offset() == 0);
}

TEST_CASE("header: multi-line brace wavelength list") {
    const EnviHeader h = EnviHeader::parse(
        "ENVI\nsamples = 1\nlines = 1\nbands = 3\ninterleave = bip\n"
        "data type = 4\nbyte order = 0\n"
        "wavelength = {400.0,\n 500.0, 600.0}\n");
    const auto wl = h.wavelengths();
    REQUIRE(wl.has_value());
    CHECK(*wl == std::vector<double>{400.0, 500.0, 600.0});
}

TEST_CASE("header: keys are case-insensitive and whitespace-normalized") {
    const EnviHeader h = EnviHeader::parse(
        "ENVI\nSamples = 4\nLINES = 2\nBands = 1\nInterleave = BSQ\n"
        "Data   Type = 1\nByte Order = 0\n");
    CHECK(h.samples() == 4);
    CHECK(h.data_type() == EnviDataType::U8);
}

TEST_CASE("header: error taxonomy") {
    CHECK_THROWS_AS(EnviHeader::parse("NOT_ENVI\nsamples = 1\n"), FormatError);
    CHECK_THROWS_AS(EnviHeader::parse("ENVI\nsamples = 1\nlines = 1\nbands = 1\n"
                                      "interleave = bsq\ndata type = 12\n"),
                    SchemaError);  // missing byte order
    CHECK_THROWS_AS(EnviHeader::parse("ENVI\nsamples = 1\nlines = 1\nbands = 1\n"
                                      "interleave = foo\ndata type = 12\nbyte order = 0\n"),
                    UnsupportedFormatError);
    CHECK_THROWS_AS(EnviHeader::parse("ENVI\nsamples = 1\nlines = 1\nbands = 1\n"
                                      "interleave = bsq\ndata type = 3\nbyte order = 0\n"),
                    UnsupportedFormatError);
    // wavelength count disagreeing with bands
    CHECK_THROWS_AS(EnviHeader::parse("ENVI\nsamples = 1\nlines = 1\nbands = 2\n"
                                      "interleave = bsq\ndata type = 4\nbyte order = 0\n"
                                      "wavelength = {400, 500, 600}\n"),
                    SchemaError);
}

TEST_CASE("read_cube: hand-computed interleave layouts agree") {
    // BSQ: band plane order; BIL: per line, band-major rows; BIP: per pixel
    const std::vector<std::uint8_t> bsq = {1, 2, 3, 4, 5, 6, 7, 8};
    const std::vector<std::uint8_t> bil = {1, 2, 5, 6, 3, 4, 7, 8};
    const std::vector<std::uint8_t> bip = {1, 5, 2, 6, 3, 7, 4, 8};

    const SpectralCube a = read_cube(header_222("bsq", 1, 0), bsq);
    const SpectralCube b = read_cube(header_222("bil", 1, 0), bil);
    const SpectralCube c = read_cube(header_222("bip", 1, 0), bip);

    CHECK(a.data == b.data);
    CHECK(b.data == c.data);
    CHECK(a.at(0, 0, 0) == 1);
    CHECK(a.at(1, 1, 0) == 4);
    CHECK(a.at(0, 0, 1) == 5);
    CHECK(a.at(1, 1, 1) == 8);
}

TEST_CASE("read_cube: big-endian 16-bit byte swap") {
    // four u16 values as big-endian byte pairs: 0x0102, 0x0304, 0x0506, 0x0708
    const std::vector<std::uint8_t> blob = {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08};
    const EnviHeader h = EnviHeader::parse(
        "ENVI\nsamples = 2\nlines = 2\nbands = 1\ninterleave = bsq\n"
        "data type = 12\nbyte order = 1\n");
    const SpectralCube cube = read_cube(h, blob);
    CHECK(cube.at(0, 0, 0) == 258.0);    // 0x0102
    CHECK(cube.at(0, 1, 0) == 772.0);    // 0x0304
    CHECK(cube.at(1, 0, 0) == 1286.0);   // 0x0506
    CHECK(cube.at(1, 1, 0) == 1800.0);   // 0x0708
}

TEST_CASE("read_cube: nonzero header offset skips leading bytes") {
    std::vector<std::uint8_t> blob = {0xDE, 0xAD, 0xBE, 0xEF, 1, 2, 3, 4, 5, 6, 7, 8};
    const EnviHeader h = EnviHeader::parse(
        "ENVI\nsamples = 2\nlines = 2\nbands = 2\ninterleave = bsq\n"
        "data type = 1\nbyte order = 0\nheader offset = 4\n");
    const SpectralCube cube = read_cube(h, blob);
    CHECK(cube.at(0, 0, 0) == 1);
    CHECK(cube.at(1, 1, 1) == 8);

    blob.pop_back();
    CHECK_THROWS_AS(read_cube(h, blob), TruncationError);
}

TEST_CASE("read_cube: zero blob and truncation") {
    const std::vector<std::uint8_t> zeros(8, 0);
    const SpectralCube cube = read_cube(header_222("bsq", 1, 0), zeros);
    for (double v : cube.data) CHECK(v == 0.0);

    const std::vector<std::uint8_t> short_blob(7, 0);
    CHECK_THROWS_AS(read_cube(header_222("bsq", 1, 0), short_blob), TruncationError);
}

TEST_CASE("read_cube: code_max defaults and override") {
    const std::vector<std::uint8_t> zeros(16, 0);
    CHECK(read_cube(header_222("bsq", 12, 0), zeros).code_max == 65535.0);
    CHECK(read_cube(header_222("bsq", 2, 0), zeros).code_max == 32767.0);
    CHECK(read_cube(header_222("bsq", 1, 0), std::vector<std::uint8_t>(8, 0)).code_max == 255.0);

    EnviHeader h = header_222("bsq", 12, 0);
    h.set_number("code max", 4095);
    CHECK(read_cube(h, zeros).code_max == 4095.0);
}

TEST_CASE("write/read round trip is bit-exact for every interleave, byte order, type") {
    const int samples = 5, lines = 4, bands = 3;
    for (const EnviDataType dtype :
         {EnviDataType::U8, EnviDataType::I16, EnviDataType::U16, EnviDataType::F32}) {
        SpectralCube cube(samples, lines, bands, {450.0, 550.0, 650.0});
        cube.code_max = default_code_max(dtype);
        std::uint64_t counter = 0;
        for (double& v : cube.data) {
            const double u = rng::uniform(7, counter++, static_cast<int>(dtype));
            switch (dtype) {
                case EnviDataType::U8: v = std::floor(u * 256.0); break;
                case EnviDataType::I16: v = std::floor(u * 65536.0) - 32768.0; break;
                case EnviDataType::U16: v = std::floor(u * 65536.0); break;
                case EnviDataType::F32: v = static_cast<float>(u * 1e3 - 500.0); break;
            }
            if (v > 65535) v = 65535;
        }
        cube.metadata["sensor id"] = "fixture";

        for (const Interleave il : {Interleave::BSQ, Interleave::BIL, Interleave::BIP}) {
            for (int order : {0, 1}) {
                const EncodedCube enc = write_cube(cube, il, dtype, order);
                const SpectralCube back = read_cube(enc.header, enc.blob);
                REQUIRE(back.data == cube.data);
                CHECK(back.wavelengths == cube.wavelengths);
                CHECK(back.units == cube.units);
                CHECK(back.metadata.at("sensor id") == "fixture");
            }
        }
    }
}

TEST_CASE("write_cube: unknown header keys survive a round trip") {
    SpectralCube cube = fixture_cube_222();
    cube.metadata["acquisition date"] = "2021-06-01";
    cube.metadata["description"] = "{ vendor text }";
    const EncodedCube enc = write_cube(cube, Interleave::BIL, EnviDataType::U8);
    CHECK(enc.header.value("acquisition date") == "2021-06-01");
    const SpectralCube back = read_cube(enc.header, enc.blob);
    CHECK(back.metadata.at("description") == "{ vendor text }");
}

TEST_CASE("write_cube: reflectance fixed-point scaling") {
    SpectralCube cube(1, 1, 1, {500.0});
    cube.units = Units::ReflectanceFactor;
    cube.at(0, 0, 0) = 1.03;
    const EncodedCube enc = write_cube(cube, Interleave::BSQ, EnviDataType::U16);
    // stored value must be 10300 little-endian
    REQUIRE(enc.blob.size() == 2);
    const int stored = enc.blob[0] | (enc.blob[1] << 8);
    CHECK(stored == 10300);
    CHECK(enc.header.number("reflectance scale factor") == 10000.0);

    const SpectralCube back = read_cube(enc.header, enc.blob);
    CHECK(back.units == Units::ReflectanceFactor);
    CHECK(back.at(0, 0, 0) == 1.03);
}

TEST_CASE("write_cube: out-of-range value is an error, not a clip") {
    SpectralCube cube(1, 1, 1, {500.0});
    cube.at(0, 0, 0) = 70000.0;
    CHECK_THROWS_AS(write_cube(cube, Interleave::BSQ, EnviDataType::U16), RangeError);
    cube.at(0, 0, 0) = -1.0;
    CHECK_THROWS_AS(write_cube(cube, Interleave::BSQ, EnviDataType::U8), RangeError);
}

TEST_CASE("certified curve: parse and validate") {
    const CertifiedCurve flat =
        parse_certified_curve("wavelength_nm,reflectance\n400,0.99\n1000,0.99\n", 0.99);
    CHECK(flat.value_at(400) == 0.99);
    CHECK(flat.value_at(700) == doctest::Approx(0.99));

    // SWIR inflections: values spanning 0.90-0.99 parse verbatim
    const CertifiedCurve swir = parse_certified_curve(
        "wavelength_nm,reflectance\n"
        "400,0.990\n1500,0.985\n2100,0.960\n2130,0.915\n2180,0.950\n2230,0.905\n2300,0.940\n"
        "2500,0.930\n",
        0.99);
    CHECK(swir.value_at(2130) == 0.915);
    CHECK(swir.value_at(2230) == 0.905);

    // a 50% panel varying 0.37-0.67
    const CertifiedCurve fifty = parse_certified_curve(
        "wavelength_nm,reflectance\n1500,0.67\n2000,0.52\n2500,0.37\n", 0.50);
    CHECK(fifty.value_at(1500) == 0.67);
    CHECK(fifty.value_at(2500) == 0.37);

    CHECK_THROWS_AS(
        parse_certified_curve("wavelength_nm,reflectance\n500,0.9\n400,0.95\n", 0.99),
        FormatError);
    CHECK_THROWS_AS(
        parse_certified_curve("wavelength_nm,reflectance\n400,1.2\n500,0.9\n", 0.99),
        RangeError);
    CHECK_THROWS_AS(parse_certified_curve("bad_header\n400,0.9\n", 0.99), FormatError);
}

TEST_CASE("curve resampling: knots exact, midpoint linear, domain guarded") {
    const CertifiedCurve c =
        parse_certified_curve("wavelength_nm,reflectance\n400,0.90\n600,0.98\n", 0.99);
    CHECK(c.value_at(500) == doctest::Approx(0.94));
    CHECK(c.value_at(400) == 0.90);
    CHECK(c.value_at(600) == 0.98);
    CHECK_THROWS_AS(c.value_at(399), DomainError);
    CHECK_THROWS_AS(c.value_at(601), DomainError);

    // monotone-bounded between adjacent knots
    const CertifiedCurve m = parse_certified_curve(
        "wavelength_nm,reflectance\n400,0.5\n500,0.8\n600,0.6\n", 0.99);
    for (int w = 400; w <= 500; ++w) {
        const double v = m.value_at(w);
        CHECK(v >= 0.5);
        CHECK(v <= 0.8);
    }
}
