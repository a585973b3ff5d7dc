#pragma once

#include <stdexcept>
#include <string>

namespace fusecond {

// Every failure raised by the library carries a category so the CLI can map
// it to an exit code (validation -> 2, numeric -> 3).
enum class ErrorCategory {
    geometry,
    format,
    config,
    parameter,
    lookup,
    fusion,
    model,
    empty_region,
    empty_structure,
    numeric,
};

const char* to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

    bool is_numeric() const noexcept { return category_ == ErrorCategory::numeric; }

private:
    ErrorCategory category_;
};

// Wraps an error raised inside a pipeline stage; keeps the original category.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.category(), "[" + stage + "] " + cause.what()), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
    if (!condition) {
        fail(category, message);
    }
}

}  // namespace fusecond
