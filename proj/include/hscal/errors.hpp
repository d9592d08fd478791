#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hscal {

// Base class for all toolkit errors. Subclasses distinguish the failure
// categories callers are expected to handle differently.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (bad magic, unparseable rows, gaps, non-monotone data).
class FormatError : public Error {
public:
    using Error::Error;
};

// Structurally valid input missing required fields or violating a schema rule.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Enumerated code outside the supported set (interleave, data type, byte order).
class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

// Binary payload shorter than the header promises.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Value outside its permitted numeric range.
class RangeError : public Error {
public:
    using Error::Error;
};

// Interpolation or lookup target outside the supported domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Shape mismatch between operands, or region outside array bounds.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid operation parameter (window sizes, radii, counts).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Not enough input data to run the operation at all.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Flat-field construction found non-positive pixel means.
class DeadPixelError : public Error {
public:
    DeadPixelError(const std::string& msg, std::vector<std::pair<int, int>> pixels)
        : Error(msg), offending(std::move(pixels)) {}

    std::vector<std::pair<int, int>> offending;  // (sample, band)
};

// Radiometric calibration cannot proceed (saturated reference, bad gains).
class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& msg, std::vector<int> bands = {})
        : Error(msg), bands_affected(std::move(bands)) {}

    std::vector<int> bands_affected;
};

// Iterative fit failed to converge within its iteration budget.
// Carries the best parameters reached so callers can inspect them.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> best, double best_value)
        : Error(msg), best_iterate(std::move(best)), best_objective(best_value) {}

    std::vector<double> best_iterate;
    double best_objective;
};

// Registration failures.
class NoSignalError : public Error {
public:
    using Error::Error;
};

class LowConfidenceError : public Error {
public:
    using Error::Error;
};

class MisalignmentError : public Error {
public:
    using Error::Error;
};

class CoregistrationError : public Error {
public:
    using Error::Error;
};

// Geometric scale estimate outside the plausibility window.
class SuspiciousScaleError : public Error {
public:
    using Error::Error;
};

// Planner handed clipped data it cannot extrapolate from.
class SaturatedInputError : public Error {
public:
    using Error::Error;
};

// Degenerate numeric situation (zero peak, zero spread) with no useful result.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Manifest failed validation before execution.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace hscal
