#pragma once

#include <stdexcept>
#include <string>

namespace qfi {

// Bad numeric input: non-finite values, unsupported bit widths, out-of-range levels.
class invalid_value_error : public std::invalid_argument {
 public:
  explicit invalid_value_error(const std::string& what) : std::invalid_argument(what) {}
};

// Tensor/layer geometry violations: channel mismatch, non-divisible pool extents, bad chains.
class shape_error : public std::invalid_argument {
 public:
  explicit shape_error(const std::string& what) : std::invalid_argument(what) {}
};

// File and schema problems: bad magic, truncated payload, malformed CSV.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: rank deficiency, underdetermined systems.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qfi
