#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace twinbeam {

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

// Base class for all library errors. Subclasses let callers (and the CLI)
// map failures to distinct machine-readable codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* code() const noexcept { return "error"; }
};

// A state fails symmetry / positivity / Heisenberg checks.
class PhysicalityError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "physicality"; }
};

// A parameter or configuration field is out of its allowed range.
class ValidationError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "validation"; }
};

// An interferometer is not at the operating point a measurement requires.
class OperatingPointError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "operating_point"; }
};

// A trace is undersampled, too short, or badly shaped for the analysis.
class SamplingError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "sampling"; }
};

// A measurement has no usable signal (e.g. beat peak below the floor).
class MeasurementError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "measurement"; }
};

// Structured-text input could not be parsed or failed field validation.
class ParseError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "parse"; }
};

// File system failures, always carrying the offending path.
class IoError : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "io"; }
};

}  // namespace twinbeam
