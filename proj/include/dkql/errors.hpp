#ifndef DKQL_ERRORS_HPP
#define DKQL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dkql {

/// Malformed arguments: dimension mismatches, out-of-range counts, bad pairings.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A linear system that could not be solved.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration problems. `line` is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace dkql

#endif  // DKQL_ERRORS_HPP
