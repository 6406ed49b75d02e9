#pragma once

#include <stdexcept>
#include <string>

namespace rise {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or unparseable configuration. `path` is a JSON pointer when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message, std::string path = {})
        : Error(path.empty() ? message : path + ": " + message), message_(message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }
    const std::string& message() const noexcept { return message_; }

    /// Same error located under `prefix` (e.g. "/scenarios/2").
    ConfigError nested(const std::string& prefix) const { return ConfigError(message_, prefix + path_); }

private:
    std::string message_;
    std::string path_;
};

/// Non-finite numbers or a state outside the model's valid regime.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Commanded force too small to define a thrust direction.
class SingularThrustError : public Error {
public:
    using Error::Error;
};

/// Desired yaw direction parallel to the thrust axis; no unique attitude.
class ExtractionError : public Error {
public:
    using Error::Error;
};

/// Session object used inconsistently (e.g. stale integral without initial snapshot).
class StateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace rise
