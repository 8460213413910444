#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qfi/layers.hpp"
#include "qfi/tensor.hpp"

namespace qfi {

// One labeled image, pixels normalized to [-1, 1].
struct TrainingSample {
  RealTensor image;
  int label = 0;
};

// Ordered layer specs plus parameter storage. Weights live in packed
// QuantTensors (one per Conv2d/FullyConnected layer, in forward order);
// each QuantActivation layer owns a persistent XOR mask over its packed
// per-image output buffer (all-zero when fault-free).
//
// Immutable during inference; mutation (bit flips, training) requires
// exclusive access. A decoded int8 copy of each weight tensor is kept in
// sync with the packed buffers so inference never re-decodes whole layers.
class NetworkModel {
 public:
  std::string name;
  int weight_bits = 1;
  int activation_bits = 1;
  Dims input_dims{1, 1, 1, 1};
  std::vector<LayerSpec> layers;

  NetworkModel() = default;

  // Builds parameter/mask storage for the given layer list and validates the
  // shape chain. Weights start at +1 (all-zero packed buffers decode to +1
  // for 1-bit; for 2-bit, to 0).
  static NetworkModel build(std::string name, int weight_bits, int activation_bits,
                            Dims input_dims, std::vector<LayerSpec> layers);

  std::size_t param_count() const { return params_.size(); }
  std::size_t mask_count() const { return masks_.size(); }
  const QuantTensor& param(std::size_t i) const { return params_[i]; }
  const BitMask& mask(std::size_t i) const { return masks_[i]; }
  const std::vector<std::int8_t>& decoded_param(std::size_t i) const { return decoded_[i]; }
  std::size_t param_layer_index(std::size_t i) const { return param_layers_[i]; }
  std::size_t qa_layer_index(std::size_t i) const { return qa_layers_[i]; }

  // Count of Conv2d layers (the paper's script-L).
  std::size_t conv_layer_count() const;
  // Parameterized (numbered) layers: Conv2d then FullyConnected in forward
  // order; pools and activations carry no number.
  std::size_t numbered_layer_count() const { return params_.size(); }
  // Index of the QuantActivation attached to numbered layer k (1-based), or
  // npos when that layer's output is not quantized (the final classifier).
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t qa_for_numbered_layer(std::size_t k) const;

  // Replaces a weight tensor (dims and bit width must match the layer spec).
  void set_param(std::size_t i, QuantTensor t);

  // XOR-flips one packed weight bit / one activation-mask bit.
  void flip_weight_bit(std::size_t param_idx, std::size_t bit);
  void flip_mask_bit(std::size_t qa_idx, std::size_t bit);

  // All masks zeroed (the fault-free state).
  void clear_masks();
  bool masks_all_zero() const;

  // Shape-chain and storage invariants; throws shape_error on violation.
  void validate() const;

  bool operator==(const NetworkModel& other) const;

 private:
  std::vector<QuantTensor> params_;
  std::vector<BitMask> masks_;
  std::vector<std::vector<std::int8_t>> decoded_;
  std::vector<std::size_t> param_layers_;
  std::vector<std::size_t> qa_layers_;

  friend struct NetworkAccess;
};

// Forward pass over one image (N=1). Quantizes the input to the activation
// bit width, then walks the layer chain. Returns the final-layer scores.
RealTensor infer(const NetworkModel& net, const RealTensor& image);

// argmax with lowest-index tie break.
int predicted_class(const RealTensor& scores);

// Cross-entropy of softmax(scores) at the true label.
double cross_entropy_loss(const RealTensor& scores, int label);

// 100 * correct / size.
double accuracy(const NetworkModel& net, const std::vector<TrainingSample>& samples);

// Mean cross-entropy over samples.
double mean_loss(const NetworkModel& net, const std::vector<TrainingSample>& samples);

}  // namespace qfi
