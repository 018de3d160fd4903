#pragma once

#include <stdexcept>
#include <string>

namespace micns {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor/graph shape inconsistency. Message names the offending op and both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Domain violation (out-of-range truth value, invalid label, bad configuration value).
class ValueError : public Error {
public:
    using Error::Error;
};

/// File I/O and format errors, with a machine-checkable reason code.
class IoError : public Error {
public:
    enum class Code {
        open_failed,
        bad_magic,
        bad_version,
        bad_header,
        truncated,
        dim_overflow,
        parse_failed,
    };

    IoError(Code code, const std::string& message) : Error(message), code_(code) {}

    Code code() const { return code_; }

private:
    Code code_;
};

}  // namespace micns
