#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hypertab {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a precondition: shape mismatch, out-of-range index, stale tape.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Bad user configuration (invalid hyperparameter, unknown option value).
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed or unusable input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Problems reading a serialized model. Subclasses distinguish the cause.
class ModelFileError : public Error {
public:
    using Error::Error;
};

class VersionMismatchError : public ModelFileError {
public:
    using ModelFileError::ModelFileError;
};

class CorruptFileError : public ModelFileError {
public:
    using ModelFileError::ModelFileError;
};

class InconsistentModelError : public ModelFileError {
public:
    using ModelFileError::ModelFileError;
};

}  // namespace hypertab
