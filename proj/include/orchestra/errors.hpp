#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace orchestra {

/// Invalid configuration value. `field()` is the dotted path, e.g. "bubbles.speed".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed text input (config JSON, trace or event lines). `line()` is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Unknown chord name.
class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

}  // namespace orchestra
