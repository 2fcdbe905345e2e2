#ifndef CYBERDEF_ERROR_HPP
#define CYBERDEF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cyberdef {

/// Base of every error raised by the library. The CLI maps each subclass
/// onto one exit code (usage 1, data/validation 2, I/O 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scenario/serve configuration or unknown identifiers.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A value failed a range or consistency check. `field()` names it.
class ValidationError : public Error {
public:
    ValidationError(std::string field, std::string reason)
        : Error(field + ": " + reason), field_(std::move(field)), reason_(std::move(reason)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

/// Malformed input: bad CSV, corrupt model file, parse failure.
class FormatError : public Error {
public:
    using Error::Error;
};

/// The model file was written by a newer format revision.
class UnsupportedVersionError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Records do not carry the features a fitted model expects.
class SchemaError : public Error {
public:
    SchemaError(std::string feature, const std::string& what)
        : Error(what), feature_(std::move(feature)) {}

    const std::string& feature() const noexcept { return feature_; }

private:
    std::string feature_;
};

/// A metric is mathematically undefined for the given inputs.
class MetricError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// API misuse, e.g. stepping a finished simulation.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Referenced object (alert id) does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

} // namespace cyberdef

#endif
