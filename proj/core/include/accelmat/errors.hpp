#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace accelmat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Structural problem in an input file; carries a human-readable locator
/// (line number, record index, row number).
class SchemaError : public Error {
public:
    SchemaError(const std::string& message, std::string locator)
        : Error(message + " (" + locator + ")"), locator_(std::move(locator)) {}

    const std::string& locator() const { return locator_; }

private:
    std::string locator_;
};

/// Agent output could not be turned into the expected structure.
class ParseError : public Error {
public:
    ParseError(const std::string& reason, std::size_t salvaged_count = 0)
        : Error(reason), reason_(reason), salvaged_count_(salvaged_count) {}

    const std::string& reason() const { return reason_; }
    std::size_t salvaged_count() const { return salvaged_count_; }

private:
    std::string reason_;
    std::size_t salvaged_count_;
};

/// Judge output missing or out-of-range score for a specific suggestion/criterion.
class ScoreParseError : public Error {
public:
    ScoreParseError(const std::string& message, int index, std::string criterion)
        : Error(message), index_(index), criterion_(std::move(criterion)) {}

    int index() const { return index_; }
    const std::string& criterion() const { return criterion_; }

private:
    int index_;
    std::string criterion_;
};

class AuthError : public Error {
public:
    using Error::Error;
};

class RateLimited : public Error {
public:
    using Error::Error;
};

class Timeout : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

/// Replay backend has no entry for a request.
class CassetteMiss : public Error {
public:
    CassetteMiss(const std::string& message, std::string fingerprint)
        : Error(message + " [fingerprint " + fingerprint + "]"),
          fingerprint_(std::move(fingerprint)) {}

    const std::string& fingerprint() const { return fingerprint_; }

private:
    std::string fingerprint_;
};

class EmptyField : public Error {
public:
    using Error::Error;
};

class MissingContext : public Error {
public:
    using Error::Error;
};

class ArityMismatch : public Error {
public:
    using Error::Error;
};

class MissingGroundTruth : public Error {
public:
    using Error::Error;
};

class EmptyPool : public Error {
public:
    using Error::Error;
};

/// Regeneration retries exhausted without a parseable result.
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace accelmat
