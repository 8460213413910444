#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qfi/errors.hpp"

namespace qfi {

using Dims = std::array<std::uint32_t, 4>;  // (N,C,H,W); unused trailing dims = 1

inline std::size_t element_count(const Dims& d) {
  return static_cast<std::size_t>(d[0]) * d[1] * d[2] * d[3];
}

// Packed fixed-bit-width integer tensor. Values are stored two's-complement
// in `bit_width` bits each, flattened row-major (N outermost, W innermost),
// little-endian bit order within bytes, zero-padded to a byte boundary.
//
// Level sets:
//   1-bit: {+1, -1}   (bit 0 -> +1, bit 1 -> -1; the sign bit is the value)
//   2-bit: {-2, -1, 0, +1}  (standard two's complement)
class QuantTensor {
 public:
  QuantTensor() : dims_{0, 0, 0, 0}, bit_width_(1) {}
  QuantTensor(const Dims& dims, int bit_width);

  const Dims& dims() const { return dims_; }
  int bit_width() const { return bit_width_; }
  std::size_t size() const { return element_count(dims_); }
  std::size_t bit_count() const { return size() * static_cast<std::size_t>(bit_width_); }
  std::size_t byte_count() const { return (bit_count() + 7) / 8; }

  std::vector<std::uint8_t>& bytes() { return data_; }
  const std::vector<std::uint8_t>& bytes() const { return data_; }

  int get(std::size_t i) const;
  void set(std::size_t i, int value);

  // XOR-flips one storage bit. bit < bit_count().
  void flip_bit(std::size_t bit);
  bool storage_bit(std::size_t bit) const;

  std::vector<int> decoded() const;
  // Decodes all elements into out (resized), as int8 levels.
  void decode_into(std::vector<std::int8_t>& out) const;

  static int min_level(int bit_width) { return bit_width == 1 ? -1 : -(1 << (bit_width - 1)); }
  static int max_level(int bit_width) { return bit_width == 1 ? 1 : (1 << (bit_width - 1)) - 1; }

  bool operator==(const QuantTensor& other) const = default;

 private:
  Dims dims_;
  int bit_width_;
  std::vector<std::uint8_t> data_;
};

// Dense real-valued tensor, same dims convention.
struct RealTensor {
  Dims dims{0, 0, 0, 0};
  std::vector<double> data;

  RealTensor() = default;
  RealTensor(const Dims& d) : dims(d), data(element_count(d), 0.0) {}
  RealTensor(const Dims& d, std::vector<double> values);

  std::size_t size() const { return element_count(dims); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // Throws invalid_value_error if any entry is non-finite.
  void check_finite() const;
};

}  // namespace qfi
