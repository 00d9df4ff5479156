#pragma once

#include <stdexcept>
#include <string>

namespace isolab {

/// input outside the mathematical domain of an operation
/// (energy below the well, evaluation at a pole, ratio mismatch, ...)
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// a numerical procedure failed to reach its accuracy target
struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

/// malformed expression source or inconsistent configuration
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
          position(pos) {}
    std::size_t position;
};

}  // namespace isolab
