#pragma once

#include <cstdint>
#include <vector>

#include "qfi/quantize.hpp"
#include "qfi/tensor.hpp"

namespace qfi {

enum class LayerKind : std::uint8_t {
  Conv2d = 0,
  MaxPool2d = 1,
  FullyConnected = 2,
  QuantActivation = 3,
};

const char* layer_kind_name(LayerKind k);

// One layer of the network. Field use depends on kind:
//   Conv2d:          in_channels, out_channels, kernel (square, stride 1, valid), weight_bits
//   MaxPool2d:       pool (square window, stride == pool)
//   FullyConnected:  in_features, out_features, weight_bits
//   QuantActivation: out_dims (the per-image output buffer), activation_bits
struct LayerSpec {
  LayerKind kind = LayerKind::Conv2d;
  std::uint32_t in_channels = 0;
  std::uint32_t out_channels = 0;
  std::uint32_t kernel = 0;
  std::uint32_t pool = 0;
  std::uint32_t in_features = 0;
  std::uint32_t out_features = 0;
  Dims out_dims{1, 1, 1, 1};
  int weight_bits = 0;
  int activation_bits = 0;

  bool has_weights() const {
    return kind == LayerKind::Conv2d || kind == LayerKind::FullyConnected;
  }
  // Weight tensor dims: Conv2d (out,in,k,k); FullyConnected (out,in,1,1).
  Dims weight_dims() const;
  std::size_t weight_elements() const { return element_count(weight_dims()); }
};

// Output dims of a layer given its per-image input dims (N preserved).
Dims layer_output_dims(const LayerSpec& spec, const Dims& in);

// Exact integer valid cross-correlation; int32 accumulation.
RealTensor conv2d_forward(const QuantTensor& input, const QuantTensor& weights,
                          const LayerSpec& spec);

// Windowed max, window = stride = spec.pool; extents must divide evenly.
QuantTensor maxpool2d(const QuantTensor& input, const LayerSpec& spec);
RealTensor maxpool2d(const RealTensor& input, const LayerSpec& spec);

// Exact integer matrix-vector product over the flattened input.
RealTensor fully_connected_forward(const QuantTensor& input, const QuantTensor& weights,
                                   const LayerSpec& spec);

// Persistent XOR mask over a packed activation buffer. Tracks its popcount so
// the all-zero case can be skipped cheaply.
struct BitMask {
  std::size_t bits = 0;
  std::vector<std::uint8_t> bytes;
  std::size_t set_count = 0;

  BitMask() = default;
  explicit BitMask(std::size_t bit_count) : bits(bit_count), bytes((bit_count + 7) / 8, 0) {}

  bool any() const { return set_count != 0; }
  void flip(std::size_t bit);
  bool test(std::size_t bit) const { return (bytes[bit >> 3] >> (bit & 7)) & 1u; }

  bool operator==(const BitMask&) const = default;
};

// Elementwise quantization of pre-activations followed by XOR with the packed
// mask (all-zero mask is a no-op).
QuantTensor quant_activation(const RealTensor& pre_act, int bit_width, const BitMask& mask);

// Raw kernels on decoded int8 levels; the public ops above and the inference
// engine share these.
namespace detail {

void conv2d_raw(const std::int8_t* in, std::uint32_t n, std::uint32_t c, std::uint32_t h,
                std::uint32_t w, const std::int8_t* weights, std::uint32_t oc, std::uint32_t k,
                std::int32_t* out);
void maxpool_raw(const std::int8_t* in, std::uint32_t n, std::uint32_t c, std::uint32_t h,
                 std::uint32_t w, std::uint32_t pool, std::int8_t* out);
void fc_raw(const std::int8_t* in, std::uint32_t n, std::uint32_t in_features,
            const std::int8_t* weights, std::uint32_t out_features, std::int32_t* out);

// Quantize an int32 pre-activation to a level of the given bit width.
inline std::int8_t quantize_int(std::int32_t v, int bit_width) {
  if (bit_width == 1) return v >= 0 ? 1 : -1;
  const std::int32_t y = 2 * v;
  return static_cast<std::int8_t>(y < -2 ? -2 : (y > 1 ? 1 : y));
}

void pack_levels(const std::int8_t* levels, std::size_t n, int bit_width,
                 std::uint8_t* out_bytes);
void unpack_levels(const std::uint8_t* bytes, std::size_t n, int bit_width, std::int8_t* out);

}  // namespace detail

}  // namespace qfi
