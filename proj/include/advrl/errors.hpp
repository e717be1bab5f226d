#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advrl {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Structural invariant violated (bad instance, bad policy, bad config).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Exact mode would exceed an enumeration or tree-size cap.
class CapExceeded : public Error {
public:
    CapExceeded(std::string what, std::size_t count, std::size_t cap)
        : Error(what + ": " + std::to_string(count) + " exceeds cap " + std::to_string(cap)),
          count_(count), cap_(cap) {}

    std::size_t count() const { return count_; }
    std::size_t cap() const { return cap_; }

private:
    std::size_t count_;
    std::size_t cap_;
};

// A policy was asked for a decision at a history it does not define.
class MissingHistory : public Error {
public:
    using Error::Error;
};

class SolverFailure : public Error {
public:
    using Error::Error;
};

class EmptyMatrix : public SolverFailure {
public:
    EmptyMatrix() : SolverFailure("matrix game has no rows or no columns") {}
};

class NonFiniteEntry : public SolverFailure {
public:
    NonFiniteEntry(long row, long col)
        : SolverFailure("non-finite matrix entry at (" + std::to_string(row) + ", " +
                        std::to_string(col) + ")"),
          row_(row), col_(col) {}

    long row() const { return row_; }
    long col() const { return col_; }

private:
    long row_;
    long col_;
};

class UnsupportedScale : public Error {
public:
    using Error::Error;
};

class InvalidSchedule : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace advrl
