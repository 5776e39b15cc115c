#pragma once

#include <stdexcept>
#include <string>

namespace msmf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyGraph : public Error {
public:
    EmptyGraph() : Error("road graph has no segments") {}
};

class InvalidGraph : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class Degenerate : public Error {
public:
    using Error::Error;
};

class InvalidDims : public Error {
public:
    using Error::Error;
};

class InvalidCluster : public Error {
public:
    using Error::Error;
};

class UnknownSegment : public Error {
public:
    explicit UnknownSegment(long long id) : Error("unknown segment id " + std::to_string(id)) {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : Error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class NonMonotonicTime : public Error {
public:
    using Error::Error;
};

class AlreadyActive : public Error {
public:
    AlreadyActive() : Error("migration session already active") {}
};

class NotActive : public Error {
public:
    NotActive() : Error("migration session not active") {}
};

class NotDone : public Error {
public:
    NotDone() : Error("migration session not done") {}
};

/// Invalid scenario configuration; `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A runtime self-check (conservation, ordering) failed.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace msmf
