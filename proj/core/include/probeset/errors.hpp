#pragma once

#include <stdexcept>
#include <string>

namespace probeset {

// Argument outside the mathematical domain of an operation (bad alpha, empty
// query set where one is required, probe index out of range, ...).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Request would enumerate or allocate past an explicit size cap.
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external input (records, configs, outcome files). `line` is
// 1-based when the source is line-oriented, 0 otherwise.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

}  // namespace probeset
