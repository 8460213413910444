#include "qfi/train.hpp"

#include <algorithm>
#include <cmath>

namespace qfi {

namespace {

double weight_surrogate(double w, int bits) {
  if (bits == 1) return w < -1.0 ? -1.0 : (w > 1.0 ? 1.0 : w);
  const double y = 2.0 * w;
  return y < -2.0 ? -2.0 : (y > 1.0 ? 1.0 : y);
}

double weight_surrogate_deriv(double w, int bits) {
  if (bits == 1) return std::fabs(w) <= 1.0 ? 1.0 : 0.0;
  return (w >= -1.0 && w <= 0.5) ? 2.0 : 0.0;
}

// Activation surrogate: clip(pre/s, lo, hi) against the level range, where s
// normalizes the integer pre-activation by the producing layer's fan-in
// (there is no normalization sub-layer to do it).
double act_surrogate(double pre, double s, int bits) {
  if (bits == 1) {
    const double y = pre / s;
    return y < -1.0 ? -1.0 : (y > 1.0 ? 1.0 : y);
  }
  const double y = 2.0 * pre / s;
  return y < -2.0 ? -2.0 : (y > 1.0 ? 1.0 : y);
}

double act_surrogate_deriv(double pre, double s, int bits) {
  if (bits == 1) return std::fabs(pre) <= s ? 1.0 / s : 0.0;
  const double y = pre / s;
  return (y >= -1.0 && y <= 0.5) ? 2.0 / s : 0.0;
}

struct LayerBuffers {
  std::vector<double> out;
  std::vector<std::uint32_t> argmax;  // pool routing
  Dims dims{1, 1, 1, 1};
};

// Forward/backward over one sample with externally supplied effective
// weights. Quantized mode caches integer-valued flows and applies the
// straight-through derivative at the cached pre-activations; surrogate mode
// runs the continuous relaxation end to end.
class GradEngine {
 public:
  GradEngine(const NetworkModel& net, bool surrogate) : net_(net), surrogate_(surrogate) {
    buffers_.resize(net.layers.size());
    act_scale_.resize(net.mask_count(), 1.0);
    double fan_in = 1.0;
    std::size_t qi = 0;
    for (const LayerSpec& spec : net.layers) {
      if (spec.kind == LayerKind::Conv2d) {
        fan_in = static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel;
      } else if (spec.kind == LayerKind::FullyConnected) {
        fan_in = static_cast<double>(spec.in_features);
      } else if (spec.kind == LayerKind::QuantActivation) {
        act_scale_[qi++] = std::sqrt(fan_in);
      }
    }
    tau_ = 1.0;
    for (auto it = net.layers.rbegin(); it != net.layers.rend(); ++it) {
      if (it->has_weights()) {
        const double f = it->kind == LayerKind::Conv2d
                             ? static_cast<double>(it->in_channels) * it->kernel * it->kernel
                             : static_cast<double>(it->in_features);
        tau_ = 1.0 / std::sqrt(f);
        break;
      }
    }
  }

  double tau() const { return tau_; }

  // weights[i] are the effective (quantized or surrogate) weights per tensor.
  double forward(const std::vector<std::vector<double>>& weights, const TrainingSample& sample) {
    input_.resize(sample.image.size());
    {
      Rng unused(0);
      for (std::size_t i = 0; i < sample.image.size(); ++i) {
        input_[i] = quantize_level(sample.image[i], net_.activation_bits,
                                   QuantMode::Deterministic, unused);
      }
    }
    Dims dims = sample.image.dims;
    const std::vector<double>* cur = &input_;
    std::size_t pi = 0;
    std::size_t qi = 0;
    for (std::size_t li = 0; li < net_.layers.size(); ++li) {
      const LayerSpec& spec = net_.layers[li];
      LayerBuffers& buf = buffers_[li];
      buf.dims = layer_output_dims(spec, dims);
      buf.out.assign(element_count(buf.dims), 0.0);
      switch (spec.kind) {
        case LayerKind::Conv2d:
          conv_forward(*cur, dims, weights[pi], spec, buf.out);
          ++pi;
          break;
        case LayerKind::FullyConnected:
          fc_forward(*cur, weights[pi], spec, buf.out);
          ++pi;
          break;
        case LayerKind::MaxPool2d:
          pool_forward(*cur, dims, spec, buf);
          break;
        case LayerKind::QuantActivation: {
          const double s = act_scale_[qi];
          if (surrogate_) {
            for (std::size_t i = 0; i < cur->size(); ++i) {
              buf.out[i] = act_surrogate((*cur)[i], s, spec.activation_bits);
            }
          } else {
            for (std::size_t i = 0; i < cur->size(); ++i) {
              buf.out[i] = detail::quantize_int(static_cast<std::int32_t>((*cur)[i]),
                                                spec.activation_bits);
            }
            apply_mask(buf.out, net_.mask(qi), spec.activation_bits);
          }
          ++qi;
          break;
        }
      }
      cur = &buf.out;
      dims = buf.dims;
    }
    const std::vector<double>& scores = buffers_.back().out;
    double mx = scores[0] * tau_;
    for (double v : scores) mx = std::max(mx, v * tau_);
    double sum = 0.0;
    for (double v : scores) sum += std::exp(v * tau_ - mx);
    softmax_.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      softmax_[i] = std::exp(scores[i] * tau_ - mx) / sum;
    }
    return std::log(sum) - (scores[static_cast<std::size_t>(sample.label)] * tau_ - mx);
  }

  // Accumulates dLoss/dweights into grad (same shapes as weights).
  void backward(const std::vector<std::vector<double>>& weights, const TrainingSample& sample,
                std::vector<std::vector<double>>& grad) {
    const std::vector<double>& scores = buffers_.back().out;
    grad_out_.assign(scores.size(), 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      grad_out_[i] = tau_ * (softmax_[i] - (static_cast<int>(i) == sample.label ? 1.0 : 0.0));
    }

    std::size_t pi = net_.param_count();
    std::size_t qi = net_.mask_count();
    for (std::size_t li = net_.layers.size(); li-- > 0;) {
      const LayerSpec& spec = net_.layers[li];
      const LayerBuffers& buf = buffers_[li];
      const std::vector<double>& in_vals = li == 0 ? input_ : buffers_[li - 1].out;
      const Dims in_dims = li == 0 ? net_.input_dims : buffers_[li - 1].dims;
      grad_in_.assign(in_vals.size(), 0.0);
      switch (spec.kind) {
        case LayerKind::Conv2d:
          --pi;
          conv_backward(in_vals, in_dims, weights[pi], spec, grad_out_, buf.dims, grad[pi],
                        grad_in_);
          break;
        case LayerKind::FullyConnected:
          --pi;
          fc_backward(in_vals, weights[pi], spec, grad_out_, grad[pi], grad_in_);
          break;
        case LayerKind::MaxPool2d:
          for (std::size_t i = 0; i < buf.out.size(); ++i) grad_in_[buf.argmax[i]] += grad_out_[i];
          break;
        case LayerKind::QuantActivation: {
          --qi;
          const double s = act_scale_[qi];
          for (std::size_t i = 0; i < in_vals.size(); ++i) {
            grad_in_[i] = grad_out_[i] * act_surrogate_deriv(in_vals[i], s, spec.activation_bits);
          }
          break;
        }
      }
      grad_out_.swap(grad_in_);
      if (li == 0) break;
    }
  }

 private:
  static void conv_forward(const std::vector<double>& in, const Dims& ind,
                           const std::vector<double>& w, const LayerSpec& spec,
                           std::vector<double>& out) {
    const std::uint32_t c = ind[1], h = ind[2], wd = ind[3];
    const std::uint32_t k = spec.kernel;
    const std::uint32_t oh = h - k + 1, ow = wd - k + 1;
    for (std::uint32_t o = 0; o < spec.out_channels; ++o) {
      double* acc = out.data() + static_cast<std::size_t>(o) * oh * ow;
      const double* w_oc = w.data() + static_cast<std::size_t>(o) * c * k * k;
      for (std::uint32_t ic = 0; ic < c; ++ic) {
        const double* plane = in.data() + static_cast<std::size_t>(ic) * h * wd;
        const double* w_ch = w_oc + static_cast<std::size_t>(ic) * k * k;
        for (std::uint32_t kh = 0; kh < k; ++kh) {
          for (std::uint32_t kw = 0; kw < k; ++kw) {
            const double wv = w_ch[kh * k + kw];
            if (wv == 0.0) continue;
            for (std::uint32_t y = 0; y < oh; ++y) {
              const double* row = plane + static_cast<std::size_t>(y + kh) * wd + kw;
              double* acc_row = acc + static_cast<std::size_t>(y) * ow;
              for (std::uint32_t x = 0; x < ow; ++x) acc_row[x] += wv * row[x];
            }
          }
        }
      }
    }
  }

  static void conv_backward(const std::vector<double>& in, const Dims& ind,
                            const std::vector<double>& w, const LayerSpec& spec,
                            const std::vector<double>& g_out, const Dims& outd,
                            std::vector<double>& g_w, std::vector<double>& g_in) {
    const std::uint32_t c = ind[1], h = ind[2], wd = ind[3];
    const std::uint32_t k = spec.kernel;
    const std::uint32_t oh = outd[2], ow = outd[3];
    for (std::uint32_t o = 0; o < spec.out_channels; ++o) {
      const double* g = g_out.data() + static_cast<std::size_t>(o) * oh * ow;
      for (std::uint32_t ic = 0; ic < c; ++ic) {
        const double* plane = in.data() + static_cast<std::size_t>(ic) * h * wd;
        double* gin_plane = g_in.data() + static_cast<std::size_t>(ic) * h * wd;
        const std::size_t wbase = (static_cast<std::size_t>(o) * c + ic) * k * k;
        for (std::uint32_t kh = 0; kh < k; ++kh) {
          for (std::uint32_t kw = 0; kw < k; ++kw) {
            const double wv = w[wbase + kh * k + kw];
            double gw = 0.0;
            for (std::uint32_t y = 0; y < oh; ++y) {
              const double* row = plane + static_cast<std::size_t>(y + kh) * wd + kw;
              double* gin_row = gin_plane + static_cast<std::size_t>(y + kh) * wd + kw;
              const double* g_row = g + static_cast<std::size_t>(y) * ow;
              for (std::uint32_t x = 0; x < ow; ++x) {
                gw += g_row[x] * row[x];
                gin_row[x] += g_row[x] * wv;
              }
            }
            g_w[wbase + kh * k + kw] += gw;
          }
        }
      }
    }
  }

  static void fc_forward(const std::vector<double>& in, const std::vector<double>& w,
                         const LayerSpec& spec, std::vector<double>& out) {
    for (std::uint32_t o = 0; o < spec.out_features; ++o) {
      const double* row = w.data() + static_cast<std::size_t>(o) * spec.in_features;
      double acc = 0.0;
      for (std::uint32_t i = 0; i < spec.in_features; ++i) acc += row[i] * in[i];
      out[o] = acc;
    }
  }

  static void fc_backward(const std::vector<double>& in, const std::vector<double>& w,
                          const LayerSpec& spec, const std::vector<double>& g_out,
                          std::vector<double>& g_w, std::vector<double>& g_in) {
    for (std::uint32_t o = 0; o < spec.out_features; ++o) {
      const double g = g_out[o];
      const std::size_t base = static_cast<std::size_t>(o) * spec.in_features;
      if (g == 0.0) continue;
      for (std::uint32_t i = 0; i < spec.in_features; ++i) {
        g_w[base + i] += g * in[i];
        g_in[i] += g * w[base + i];
      }
    }
  }

  static void pool_forward(const std::vector<double>& in, const Dims& ind, const LayerSpec& spec,
                           LayerBuffers& buf) {
    const std::uint32_t c = ind[1], h = ind[2], w = ind[3];
    const std::uint32_t pool = spec.pool;
    const std::uint32_t oh = h / pool, ow = w / pool;
    buf.argmax.assign(buf.out.size(), 0);
    std::size_t oi = 0;
    for (std::uint32_t ch = 0; ch < c; ++ch) {
      const std::size_t plane = static_cast<std::size_t>(ch) * h * w;
      for (std::uint32_t y = 0; y < oh; ++y) {
        for (std::uint32_t x = 0; x < ow; ++x) {
          std::size_t best_idx = plane + static_cast<std::size_t>(y * pool) * w + x * pool;
          double best = in[best_idx];
          for (std::uint32_t py = 0; py < pool; ++py) {
            for (std::uint32_t px = 0; px < pool; ++px) {
              const std::size_t idx =
                  plane + static_cast<std::size_t>(y * pool + py) * w + x * pool + px;
              if (in[idx] > best) {
                best = in[idx];
                best_idx = idx;
              }
            }
          }
          buf.out[oi] = best;
          buf.argmax[oi] = static_cast<std::uint32_t>(best_idx);
          ++oi;
        }
      }
    }
  }

  static void apply_mask(std::vector<double>& levels, const BitMask& mask, int bits) {
    if (!mask.any()) return;
    std::vector<std::int8_t> q(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) q[i] = static_cast<std::int8_t>(levels[i]);
    std::vector<std::uint8_t> packed(mask.bytes.size());
    detail::pack_levels(q.data(), q.size(), bits, packed.data());
    for (std::size_t b = 0; b < packed.size(); ++b) packed[b] ^= mask.bytes[b];
    detail::unpack_levels(packed.data(), q.size(), bits, q.data());
    for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = q[i];
  }

  const NetworkModel& net_;
  bool surrogate_;
  double tau_ = 1.0;
  std::vector<double> act_scale_;
  std::vector<LayerBuffers> buffers_;
  std::vector<double> input_;
  std::vector<double> softmax_;
  std::vector<double> grad_out_;
  std::vector<double> grad_in_;
};

std::vector<std::vector<double>> effective_weights(const NetworkModel& net,
                                                   const std::vector<RealTensor>& shadow,
                                                   bool surrogate) {
  std::vector<std::vector<double>> w(shadow.size());
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    const int bits = net.param(i).bit_width();
    w[i].resize(shadow[i].size());
    Rng unused(0);
    for (std::size_t j = 0; j < shadow[i].size(); ++j) {
      w[i][j] = surrogate ? weight_surrogate(shadow[i][j], bits)
                          : static_cast<double>(quantize_level(shadow[i][j], bits,
                                                               QuantMode::Deterministic, unused));
    }
  }
  return w;
}

void refresh_net_params(NetworkModel& net, const std::vector<RealTensor>& shadow, QuantMode mode,
                        Rng& rng) {
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    const LayerSpec& spec = net.layers[net.param_layer_index(i)];
    net.set_param(i, quantize_tensor(shadow[i], spec.weight_bits, mode, rng));
  }
}

// The weights actually deployed in the net (decoded levels), as doubles.
std::vector<std::vector<double>> deployed_weights(const NetworkModel& net) {
  std::vector<std::vector<double>> w(net.param_count());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& levels = net.decoded_param(i);
    w[i].assign(levels.begin(), levels.end());
  }
  return w;
}

}  // namespace

double shadow_loss(const NetworkModel& net, const std::vector<RealTensor>& shadow,
                   const TrainingSample& sample, bool surrogate_forward,
                   std::vector<RealTensor>* grad_out) {
  const auto weights = effective_weights(net, shadow, surrogate_forward);
  GradEngine engine(net, surrogate_forward);
  const double loss = engine.forward(weights, sample);
  if (grad_out) {
    std::vector<std::vector<double>> gw(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) gw[i].assign(weights[i].size(), 0.0);
    engine.backward(weights, sample, gw);
    grad_out->clear();
    for (std::size_t i = 0; i < shadow.size(); ++i) {
      RealTensor g(shadow[i].dims);
      const int bits = net.param(i).bit_width();
      for (std::size_t j = 0; j < g.size(); ++j) {
        g[j] = gw[i][j] * weight_surrogate_deriv(shadow[i][j], bits);
      }
      grad_out->push_back(std::move(g));
    }
  }
  return loss;
}

TrainResult train(NetworkModel& net, const std::vector<TrainingSample>& data,
                  const TrainConfig& cfg, Rng& rng) {
  if (data.empty()) throw invalid_value_error("empty training dataset");
  if (cfg.lr < 0.0) throw invalid_value_error("negative learning rate");
  if (cfg.epochs < 0) throw invalid_value_error("negative epoch count");
  const int batch = std::max(1, cfg.batch_size);

  TrainResult result;
  result.shadow.reserve(net.param_count());
  for (std::size_t i = 0; i < net.param_count(); ++i) {
    RealTensor s(net.param(i).dims());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = rng.uniform(-0.5, 0.5);
    result.shadow.push_back(std::move(s));
  }
  refresh_net_params(net, result.shadow, cfg.weight_mode, rng);

  GradEngine engine(net, /*surrogate=*/false);
  std::vector<std::vector<double>> grads(net.param_count());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch));
      auto weights = deployed_weights(net);
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i].assign(weights[i].size(), 0.0);
      for (std::size_t s = start; s < end; ++s) {
        engine.forward(weights, data[s]);
        engine.backward(weights, data[s], grads);
      }
      const double scale = cfg.lr / static_cast<double>(end - start);
      for (std::size_t i = 0; i < result.shadow.size(); ++i) {
        RealTensor& sh = result.shadow[i];
        const int bits = net.param(i).bit_width();
        for (std::size_t j = 0; j < sh.size(); ++j) {
          sh[j] -= scale * grads[i][j] * weight_surrogate_deriv(sh[j], bits);
          if (sh[j] > 1.0) sh[j] = 1.0;
          if (sh[j] < -1.0) sh[j] = -1.0;
        }
      }
      refresh_net_params(net, result.shadow, cfg.weight_mode, rng);
    }
    result.epoch_loss.push_back(mean_loss(net, data));
    result.epoch_accuracy.push_back(accuracy(net, data));
  }
  return result;
}

}  // namespace qfi
