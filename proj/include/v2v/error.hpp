#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2v {

/// Base class for every failure the library reports deliberately.
/// Anything escaping a public entry point that is not a v2v::Error is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (dimension mismatch,
/// nonpositive scale, out-of-range argument, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Malformed file content. Carries the byte offset at which parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset_(byte_offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Structurally valid input in a format this build does not handle
/// (e.g. stereo or float WAV payloads).
class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

/// An iterative solver ran out of iterations. Carries the last estimate and
/// iterate so callers can inspect how far it got.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double last_estimate,
                     std::vector<double> last_iterate)
        : Error(msg),
          last_estimate_(last_estimate),
          last_iterate_(std::move(last_iterate)) {}

    double last_estimate() const { return last_estimate_; }
    const std::vector<double>& last_iterate() const { return last_iterate_; }

private:
    double last_estimate_;
    std::vector<double> last_iterate_;
};

/// Training produced a non-finite loss. Carries the epoch where it happened.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& msg, int epoch)
        : Error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

    int epoch() const { return epoch_; }

private:
    int epoch_;
};

inline void require(bool condition, const char* msg) {
    if (!condition) throw ContractError(msg);
}

inline void require(bool condition, const std::string& msg) {
    if (!condition) throw ContractError(msg);
}

} // namespace v2v
