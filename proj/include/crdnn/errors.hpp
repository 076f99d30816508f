#pragma once

#include <stdexcept>
#include <string>

namespace crdnn {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid configuration detected before any computation starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

// Non-finite values or divergence during training.
class NumericError : public Error {
public:
    using Error::Error;
};

// An operation was invoked in the wrong order (e.g. backward without forward).
class StateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class VersionError : public IoError {
public:
    using IoError::IoError;
};

} // namespace crdnn
