#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exmig {

/// Invalid or inconsistent user configuration. Maps to CLI exit status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed unified diff input.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what)
        , m_line(line)
    {
    }

    /// 1-based line number of the offending input line.
    std::size_t line() const noexcept { return m_line; }

private:
    std::size_t m_line;
};

/// The host environment cannot run what was asked (missing executable, unwritable scratch).
class EnvironmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An LLM backend could not produce a response.
class LlmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace exmig
