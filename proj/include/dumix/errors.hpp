// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dumix {

// Base class for all errors raised by the library. Subclasses map onto
// CLI exit codes: ConfigError/ValidationError -> 1, IntegrityError/IoError -> 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad usage, unreadable/unknown input files, unsupported versions.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// An input parsed but violates a documented invariant (duplicate source
// names, proportions not summing to 1, infeasible budget, ...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Data does not match its manifest: checksum mismatch, token-count
// mismatch, truncated or corrupted state images.
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure while reading or writing payload data.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace dumix
