#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfdx {

enum class ErrorKind {
    invalid_name,
    unknown_stereotype,
    applicability,
    missing_target,
    conflict,
    self_flow,
    invariant,
    io,
    pattern,
    parse,
    dockerfile,
    input,
    fatal,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure inside a configuration, IaC or build file.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& message)
        : Error(ErrorKind::parse, file + ":" + std::to_string(line) + ": " + message),
          file_(std::move(file)), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

} // namespace dfdx
