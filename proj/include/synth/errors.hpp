#pragma once

#include <stdexcept>
#include <string>

namespace synth {

// Error categories, mapped to CLI exit codes (usage=1, data=2, numerical=3).
enum class ErrorKind {
    missing_file,
    unsupported_format,
    corrupt_data,
    unwritable_path,
    invalid_argument,
    dimension_mismatch,
    numerical,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        return kind_ == ErrorKind::numerical ? 3 : 2;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

} // namespace synth
