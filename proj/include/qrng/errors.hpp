#pragma once

#include <stdexcept>
#include <string>

namespace qrng {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument or configuration value violates its documented precondition.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// The interferometer is built so that the phase term cannot move the bias.
class DegenerateDeviceError : public Error {
public:
    using Error::Error;
};

/// Variance or budget arithmetic left nothing to extract.
class NoEntropyError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent configuration. `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Input files that are missing, truncated or the wrong size.
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace qrng
