#pragma once

#include <string>
#include <vector>

#include "qfi/network.hpp"

namespace qfi {

enum class FaultDomain { Weight, Activation };

const char* fault_domain_name(FaultDomain d);
FaultDomain fault_domain_from_name(const std::string& name);

// Named layer plan: weight/activation bit widths plus the ordered layer list
// and the expected input dims.
struct TopologyDescriptor {
  std::string name;
  int weight_bits = 1;
  int activation_bits = 1;
  Dims input_dims{1, 1, 1, 1};
  std::vector<LayerSpec> layers;
};

// The CNV plan: Conv(3-64).Conv(64-64).Pool.Conv(64-128).Conv(128-128).Pool.
// Conv(128-256).Conv(256-256).Pool.FC(256-512).FC(512-512).FC(512-10), all
// convs 3x3 valid on a 3x32x32 input, a quantized activation after every
// conv and after fc1/fc2. The third pool is 1x1: the spatial extent is
// already 1x1 after conv6, so it exists only to complete the layer plan.
TopologyDescriptor cnv_descriptor(int weight_bits, int activation_bits);

// Small trainable plan for desk-scale campaigns: Conv(3-12).Pool.FC(300-10)
// on a 3x12x12 input; 3324 one-bit weight bits.
TopologyDescriptor toy_descriptor(int weight_bits = 1, int activation_bits = 1);

// Descriptor by architecture name: cnvW1A1, cnvW2A2, toy.
TopologyDescriptor descriptor_by_name(const std::string& arch);

NetworkModel build_network(const TopologyDescriptor& d);
NetworkModel build_cnv(int weight_bits, int activation_bits);
NetworkModel build_toy();

// Total addressable storage bits of a fault domain: weights are packed
// parameter bits, activations are the per-inference quantized output buffers.
std::size_t count_susceptible_bits(const NetworkModel& net, FaultDomain domain);

}  // namespace qfi
