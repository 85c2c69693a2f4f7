#pragma once

#include <stdexcept>
#include <string>

namespace vcnac {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a contract: wrong layout, rate, shape, or an out-of-range argument.
class InputError : public Error {
public:
    using Error::Error;
};

class LayoutError : public InputError {
public:
    using InputError::InputError;
};

// A metric that has no defined value for the given inputs (e.g. all-zero reference).
class MetricError : public InputError {
public:
    using InputError::InputError;
};

// Malformed or unsupported file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Codec configuration is invalid or does not match the digest stored in a file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace vcnac
