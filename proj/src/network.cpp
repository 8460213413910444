#include "qfi/network.hpp"

#include <algorithm>
#include <cmath>

#include "qfi/quantize.hpp"

namespace qfi {

NetworkModel NetworkModel::build(std::string name, int weight_bits, int activation_bits,
                                 Dims input_dims, std::vector<LayerSpec> layers) {
  NetworkModel net;
  net.name = std::move(name);
  net.weight_bits = weight_bits;
  net.activation_bits = activation_bits;
  net.input_dims = input_dims;
  net.layers = std::move(layers);
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerSpec& spec = net.layers[li];
    if (spec.has_weights()) {
      net.params_.emplace_back(spec.weight_dims(), spec.weight_bits);
      net.param_layers_.push_back(li);
    } else if (spec.kind == LayerKind::QuantActivation) {
      const std::size_t bits =
          element_count(spec.out_dims) * static_cast<std::size_t>(spec.activation_bits);
      net.masks_.emplace_back(bits);
      net.qa_layers_.push_back(li);
    }
  }
  net.decoded_.resize(net.params_.size());
  for (std::size_t i = 0; i < net.params_.size(); ++i) {
    net.params_[i].decode_into(net.decoded_[i]);
  }
  net.validate();
  return net;
}

std::size_t NetworkModel::conv_layer_count() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(),
                    [](const LayerSpec& s) { return s.kind == LayerKind::Conv2d; }));
}

std::size_t NetworkModel::qa_for_numbered_layer(std::size_t k) const {
  if (k < 1 || k > params_.size()) throw invalid_value_error("layer number out of range");
  const std::size_t layer_idx = param_layers_[k - 1];
  const std::size_t next_param_layer =
      k < params_.size() ? param_layers_[k] : layers.size();
  for (std::size_t i = 0; i < qa_layers_.size(); ++i) {
    if (qa_layers_[i] > layer_idx && qa_layers_[i] < next_param_layer) return i;
  }
  return npos;
}

void NetworkModel::set_param(std::size_t i, QuantTensor t) {
  const LayerSpec& spec = layers[param_layers_[i]];
  if (t.dims() != spec.weight_dims() || t.bit_width() != spec.weight_bits) {
    throw shape_error("parameter tensor does not match layer spec");
  }
  params_[i] = std::move(t);
  params_[i].decode_into(decoded_[i]);
}

void NetworkModel::flip_weight_bit(std::size_t param_idx, std::size_t bit) {
  QuantTensor& t = params_[param_idx];
  t.flip_bit(bit);
  const std::size_t elem = bit / static_cast<std::size_t>(t.bit_width());
  decoded_[param_idx][elem] = static_cast<std::int8_t>(t.get(elem));
}

void NetworkModel::flip_mask_bit(std::size_t qa_idx, std::size_t bit) {
  masks_[qa_idx].flip(bit);
}

void NetworkModel::clear_masks() {
  for (std::size_t i = 0; i < masks_.size(); ++i) {
    masks_[i] = BitMask(masks_[i].bits);
  }
}

bool NetworkModel::masks_all_zero() const {
  return std::none_of(masks_.begin(), masks_.end(), [](const BitMask& m) { return m.any(); });
}

void NetworkModel::validate() const {
  std::size_t expected_params = 0;
  for (const LayerSpec& s : layers) {
    if (s.has_weights()) ++expected_params;
  }
  if (expected_params != params_.size()) {
    throw shape_error("parameter tensor count does not match parameterized layer count");
  }
  Dims cur = input_dims;
  std::size_t pi = 0;
  std::size_t qi = 0;
  for (const LayerSpec& spec : layers) {
    if (spec.has_weights()) {
      if (params_[pi].dims() != spec.weight_dims()) {
        throw shape_error("weight tensor dims mismatch at " + std::string(layer_kind_name(spec.kind)));
      }
      if (params_[pi].bit_width() != spec.weight_bits) {
        throw shape_error("weight bit width mismatch");
      }
      ++pi;
    }
    if (spec.kind == LayerKind::QuantActivation) {
      const std::size_t bits =
          element_count(spec.out_dims) * static_cast<std::size_t>(spec.activation_bits);
      if (masks_[qi].bits != bits) throw shape_error("activation mask size mismatch");
      ++qi;
    }
    cur = layer_output_dims(spec, cur);
  }
}

bool NetworkModel::operator==(const NetworkModel& other) const {
  return name == other.name && weight_bits == other.weight_bits &&
         activation_bits == other.activation_bits && input_dims == other.input_dims &&
         params_ == other.params_ && masks_ == other.masks_;
}

namespace {

struct Flow {
  std::vector<std::int8_t> q;     // quantized levels
  std::vector<std::int32_t> pre;  // integer pre-activations
  bool quantized = false;
  Dims dims{1, 1, 1, 1};
};

}  // namespace

RealTensor infer(const NetworkModel& net, const RealTensor& image) {
  if (image.dims[1] != net.input_dims[1] || image.dims[2] != net.input_dims[2] ||
      image.dims[3] != net.input_dims[3] || image.dims[0] != 1) {
    throw shape_error("image dims do not match network input");
  }
  Flow flow;
  flow.dims = image.dims;
  flow.quantized = true;
  flow.q.resize(image.size());
  {
    Rng unused(0);
    for (std::size_t i = 0; i < image.size(); ++i) {
      flow.q[i] = static_cast<std::int8_t>(
          quantize_level(image[i], net.activation_bits, QuantMode::Deterministic, unused));
    }
  }

  std::size_t pi = 0;
  std::size_t qi = 0;
  std::vector<std::uint8_t> packed;  // scratch for mask application
  for (const LayerSpec& spec : net.layers) {
    const Dims out_dims = layer_output_dims(spec, flow.dims);
    switch (spec.kind) {
      case LayerKind::Conv2d: {
        if (!flow.quantized) throw shape_error("conv input is not quantized");
        flow.pre.resize(element_count(out_dims));
        detail::conv2d_raw(flow.q.data(), flow.dims[0], flow.dims[1], flow.dims[2], flow.dims[3],
                           net.decoded_param(pi).data(), spec.out_channels, spec.kernel,
                           flow.pre.data());
        flow.quantized = false;
        ++pi;
        break;
      }
      case LayerKind::FullyConnected: {
        if (!flow.quantized) throw shape_error("fc input is not quantized");
        flow.pre.resize(element_count(out_dims));
        detail::fc_raw(flow.q.data(), flow.dims[0], spec.in_features,
                       net.decoded_param(pi).data(), spec.out_features, flow.pre.data());
        flow.quantized = false;
        ++pi;
        break;
      }
      case LayerKind::MaxPool2d: {
        if (!flow.quantized) throw shape_error("pool input is not quantized");
        std::vector<std::int8_t> pooled(element_count(out_dims));
        detail::maxpool_raw(flow.q.data(), flow.dims[0], flow.dims[1], flow.dims[2], flow.dims[3],
                            spec.pool, pooled.data());
        flow.q = std::move(pooled);
        break;
      }
      case LayerKind::QuantActivation: {
        if (flow.quantized) throw shape_error("activation input is already quantized");
        flow.q.resize(flow.pre.size());
        for (std::size_t i = 0; i < flow.pre.size(); ++i) {
          flow.q[i] = detail::quantize_int(flow.pre[i], spec.activation_bits);
        }
        const BitMask& mask = net.mask(qi);
        if (mask.any()) {
          packed.resize(mask.bytes.size());
          detail::pack_levels(flow.q.data(), flow.q.size(), spec.activation_bits, packed.data());
          for (std::size_t b = 0; b < packed.size(); ++b) packed[b] ^= mask.bytes[b];
          detail::unpack_levels(packed.data(), flow.q.size(), spec.activation_bits, flow.q.data());
        }
        flow.quantized = true;
        ++qi;
        break;
      }
    }
    flow.dims = out_dims;
  }

  RealTensor scores(flow.dims);
  if (flow.quantized) {
    for (std::size_t i = 0; i < flow.q.size(); ++i) scores[i] = flow.q[i];
  } else {
    for (std::size_t i = 0; i < flow.pre.size(); ++i) scores[i] = flow.pre[i];
  }
  return scores;
}

int predicted_class(const RealTensor& scores) {
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  }
  return best;
}

double cross_entropy_loss(const RealTensor& scores, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.size()) {
    throw invalid_value_error("label out of range");
  }
  double mx = scores[0];
  for (double v : scores.data) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : scores.data) sum += std::exp(v - mx);
  return std::log(sum) - (scores[label] - mx);
}

double accuracy(const NetworkModel& net, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw invalid_value_error("empty dataset");
  std::size_t correct = 0;
  for (const TrainingSample& s : samples) {
    if (predicted_class(infer(net, s.image)) == s.label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
}

double mean_loss(const NetworkModel& net, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw invalid_value_error("empty dataset");
  double total = 0.0;
  for (const TrainingSample& s : samples) {
    total += cross_entropy_loss(infer(net, s.image), s.label);
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace qfi
