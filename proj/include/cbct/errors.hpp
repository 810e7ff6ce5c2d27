#pragma once

#include <stdexcept>
#include <string>

namespace cbct {

/// Non-physical or inconsistent acquisition / grid description.
class GeometryError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated file contents.
class FormatError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor or volume shapes.
class ShapeError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// Bad configuration keys or values.
class ConfigError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown during an iterative solve.
class NumericalError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

}  // namespace cbct
