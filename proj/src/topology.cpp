#include "qfi/topology.hpp"

#include <algorithm>

namespace qfi {

const char* fault_domain_name(FaultDomain d) {
  return d == FaultDomain::Weight ? "weight" : "activation";
}

FaultDomain fault_domain_from_name(const std::string& name) {
  if (name == "weight") return FaultDomain::Weight;
  if (name == "activation") return FaultDomain::Activation;
  throw invalid_value_error("unknown fault domain '" + name + "'");
}

namespace {

LayerSpec conv(std::uint32_t in_ch, std::uint32_t out_ch, int weight_bits) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  s.kernel = 3;
  s.weight_bits = weight_bits;
  return s;
}

LayerSpec quant_act(std::uint32_t c, std::uint32_t h, std::uint32_t w, int activation_bits) {
  LayerSpec s;
  s.kind = LayerKind::QuantActivation;
  s.out_dims = {1, c, h, w};
  s.activation_bits = activation_bits;
  return s;
}

LayerSpec pool(std::uint32_t size) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool2d;
  s.pool = size;
  return s;
}

LayerSpec fc(std::uint32_t in_f, std::uint32_t out_f, int weight_bits) {
  LayerSpec s;
  s.kind = LayerKind::FullyConnected;
  s.in_features = in_f;
  s.out_features = out_f;
  s.weight_bits = weight_bits;
  return s;
}

void require_bits(int bits) {
  if (bits != 1 && bits != 2) throw invalid_value_error("unsupported bit width");
}

}  // namespace

TopologyDescriptor cnv_descriptor(int weight_bits, int activation_bits) {
  require_bits(weight_bits);
  require_bits(activation_bits);
  TopologyDescriptor d;
  d.name = "cnvW" + std::to_string(weight_bits) + "A" + std::to_string(activation_bits);
  d.weight_bits = weight_bits;
  d.activation_bits = activation_bits;
  d.input_dims = {1, 3, 32, 32};
  const int w = weight_bits;
  const int a = activation_bits;
  d.layers = {
      conv(3, 64, w),    quant_act(64, 30, 30, a),
      conv(64, 64, w),   quant_act(64, 28, 28, a),
      pool(2),
      conv(64, 128, w),  quant_act(128, 12, 12, a),
      conv(128, 128, w), quant_act(128, 10, 10, a),
      pool(2),
      conv(128, 256, w), quant_act(256, 3, 3, a),
      conv(256, 256, w), quant_act(256, 1, 1, a),
      pool(1),
      fc(256, 512, w),   quant_act(512, 1, 1, a),
      fc(512, 512, w),   quant_act(512, 1, 1, a),
      fc(512, 10, w),
  };
  return d;
}

TopologyDescriptor toy_descriptor(int weight_bits, int activation_bits) {
  require_bits(weight_bits);
  require_bits(activation_bits);
  TopologyDescriptor d;
  d.name = weight_bits == 1 && activation_bits == 1
               ? "toy"
               : "toyW" + std::to_string(weight_bits) + "A" + std::to_string(activation_bits);
  d.weight_bits = weight_bits;
  d.activation_bits = activation_bits;
  d.input_dims = {1, 3, 12, 12};
  d.layers = {
      conv(3, 12, weight_bits),
      quant_act(12, 10, 10, activation_bits),
      pool(2),
      fc(300, 10, weight_bits),
  };
  return d;
}

TopologyDescriptor descriptor_by_name(const std::string& arch) {
  if (arch == "cnvW1A1") return cnv_descriptor(1, 1);
  if (arch == "cnvW2A2") return cnv_descriptor(2, 2);
  if (arch == "toy") return toy_descriptor();
  if (arch == "toyW2A2") return toy_descriptor(2, 2);
  throw invalid_value_error("unknown architecture '" + arch + "'");
}

NetworkModel build_network(const TopologyDescriptor& d) {
  return NetworkModel::build(d.name, d.weight_bits, d.activation_bits, d.input_dims, d.layers);
}

NetworkModel build_cnv(int weight_bits, int activation_bits) {
  return build_network(cnv_descriptor(weight_bits, activation_bits));
}

NetworkModel build_toy() { return build_network(toy_descriptor()); }

std::size_t count_susceptible_bits(const NetworkModel& net, FaultDomain domain) {
  std::size_t bits = 0;
  if (domain == FaultDomain::Weight) {
    for (std::size_t i = 0; i < net.param_count(); ++i) bits += net.param(i).bit_count();
  } else {
    for (std::size_t i = 0; i < net.mask_count(); ++i) bits += net.mask(i).bits;
  }
  return bits;
}

}  // namespace qfi
