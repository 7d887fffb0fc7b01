#pragma once

#include <stdexcept>
#include <string>

namespace mcmcnet {

/// Base for every error raised by the library. Callers that only need a
/// message can catch this; the subclasses let tests and the CLI tell the
/// failure classes apart.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (range, shape, ordering).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A linear system or factorization could not be solved.
class SolverError : public Error {
public:
    using Error::Error;
};

/// A file did not have the expected layout (magic, version, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A configuration key or value was rejected. `key()` is the dotted path.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace mcmcnet
