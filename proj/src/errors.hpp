#pragma once

#include <stdexcept>
#include <string>

namespace p3m {

// Error categories; mirrored one-to-one by the C API status codes.
enum class ErrorCode {
    InvalidArgument = 1,
    SizeMismatch = 2,
    Io = 3,
    BadState = 4,
    Numeric = 5,
    Unsupported = 6,
    Internal = 7,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

}  // namespace p3m
