#include "qfi/tensor.hpp"

#include <cmath>
#include <string>

namespace qfi {

QuantTensor::QuantTensor(const Dims& dims, int bit_width) : dims_(dims), bit_width_(bit_width) {
  if (bit_width != 1 && bit_width != 2) {
    throw invalid_value_error("unsupported bit width " + std::to_string(bit_width));
  }
  data_.assign(byte_count(), 0);
}

int QuantTensor::get(std::size_t i) const {
  const std::size_t base = i * static_cast<std::size_t>(bit_width_);
  unsigned raw = 0;
  for (int b = 0; b < bit_width_; ++b) {
    const std::size_t pos = base + b;
    raw |= static_cast<unsigned>((data_[pos >> 3] >> (pos & 7)) & 1u) << b;
  }
  if (bit_width_ == 1) return raw ? -1 : 1;
  // Sign-extend from bit_width_ bits.
  const unsigned sign = 1u << (bit_width_ - 1);
  return static_cast<int>((raw ^ sign)) - static_cast<int>(sign);
}

void QuantTensor::set(std::size_t i, int value) {
  unsigned raw;
  if (bit_width_ == 1) {
    if (value != 1 && value != -1) {
      throw invalid_value_error("1-bit level must be +1 or -1, got " + std::to_string(value));
    }
    raw = value == -1 ? 1u : 0u;
  } else {
    if (value < min_level(bit_width_) || value > max_level(bit_width_)) {
      throw invalid_value_error("value " + std::to_string(value) + " outside " +
                                std::to_string(bit_width_) + "-bit range");
    }
    raw = static_cast<unsigned>(value) & ((1u << bit_width_) - 1u);
  }
  const std::size_t base = i * static_cast<std::size_t>(bit_width_);
  for (int b = 0; b < bit_width_; ++b) {
    const std::size_t pos = base + b;
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << (pos & 7));
    if ((raw >> b) & 1u) {
      data_[pos >> 3] |= mask;
    } else {
      data_[pos >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }
}

void QuantTensor::flip_bit(std::size_t bit) {
  if (bit >= bit_count()) {
    throw invalid_value_error("bit index " + std::to_string(bit) + " out of range");
  }
  data_[bit >> 3] ^= static_cast<std::uint8_t>(1u << (bit & 7));
}

bool QuantTensor::storage_bit(std::size_t bit) const {
  return (data_[bit >> 3] >> (bit & 7)) & 1u;
}

std::vector<int> QuantTensor::decoded() const {
  std::vector<int> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get(i);
  return out;
}

void QuantTensor::decode_into(std::vector<std::int8_t>& out) const {
  out.resize(size());
  if (bit_width_ == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (data_[i >> 3] >> (i & 7)) & 1u ? -1 : 1;
    }
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t base = i * 2;
      const unsigned raw = (data_[base >> 3] >> (base & 7)) & 3u;
      out[i] = static_cast<std::int8_t>(static_cast<int>(raw ^ 2u) - 2);
    }
  }
}

RealTensor::RealTensor(const Dims& d, std::vector<double> values) : dims(d), data(std::move(values)) {
  if (data.size() != element_count(d)) {
    throw shape_error("value count does not match dims");
  }
}

void RealTensor::check_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) throw invalid_value_error("non-finite tensor entry");
  }
}

}  // namespace qfi
