#include "qfi/layers.hpp"

#include <algorithm>
#include <string>

namespace qfi {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "Conv2d";
    case LayerKind::MaxPool2d: return "MaxPool2d";
    case LayerKind::FullyConnected: return "FullyConnected";
    case LayerKind::QuantActivation: return "QuantActivation";
  }
  return "?";
}

Dims LayerSpec::weight_dims() const {
  if (kind == LayerKind::Conv2d) return {out_channels, in_channels, kernel, kernel};
  if (kind == LayerKind::FullyConnected) return {out_features, in_features, 1, 1};
  return {0, 0, 0, 0};
}

Dims layer_output_dims(const LayerSpec& spec, const Dims& in) {
  switch (spec.kind) {
    case LayerKind::Conv2d: {
      if (in[1] != spec.in_channels) {
        throw shape_error("conv input has " + std::to_string(in[1]) + " channels, expected " +
                          std::to_string(spec.in_channels));
      }
      if (in[2] < spec.kernel || in[3] < spec.kernel) {
        throw shape_error("conv input smaller than kernel");
      }
      return {in[0], spec.out_channels, in[2] - spec.kernel + 1, in[3] - spec.kernel + 1};
    }
    case LayerKind::MaxPool2d: {
      if (spec.pool == 0 || in[2] % spec.pool != 0 || in[3] % spec.pool != 0) {
        throw shape_error("pool extents not divisible by pool size");
      }
      return {in[0], in[1], in[2] / spec.pool, in[3] / spec.pool};
    }
    case LayerKind::FullyConnected: {
      const std::size_t flat = static_cast<std::size_t>(in[1]) * in[2] * in[3];
      if (flat != spec.in_features) {
        throw shape_error("fc input length " + std::to_string(flat) + ", expected " +
                          std::to_string(spec.in_features));
      }
      return {in[0], spec.out_features, 1, 1};
    }
    case LayerKind::QuantActivation: {
      if (in[1] != spec.out_dims[1] || in[2] != spec.out_dims[2] || in[3] != spec.out_dims[3]) {
        throw shape_error("activation dims mismatch");
      }
      return in;
    }
  }
  throw shape_error("unknown layer kind");
}

namespace detail {

void conv2d_raw(const std::int8_t* in, std::uint32_t n, std::uint32_t c, std::uint32_t h,
                std::uint32_t w, const std::int8_t* weights, std::uint32_t oc, std::uint32_t k,
                std::int32_t* out) {
  const std::uint32_t oh = h - k + 1;
  const std::uint32_t ow = w - k + 1;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  for (std::uint32_t img = 0; img < n; ++img) {
    const std::int8_t* in_img = in + static_cast<std::size_t>(img) * c * in_plane;
    std::int32_t* out_img = out + static_cast<std::size_t>(img) * oc * out_plane;
    std::fill(out_img, out_img + static_cast<std::size_t>(oc) * out_plane, 0);
    for (std::uint32_t o = 0; o < oc; ++o) {
      std::int32_t* acc = out_img + static_cast<std::size_t>(o) * out_plane;
      const std::int8_t* w_oc = weights + static_cast<std::size_t>(o) * c * k * k;
      for (std::uint32_t ic = 0; ic < c; ++ic) {
        const std::int8_t* in_ch = in_img + static_cast<std::size_t>(ic) * in_plane;
        const std::int8_t* w_ch = w_oc + static_cast<std::size_t>(ic) * k * k;
        for (std::uint32_t kh = 0; kh < k; ++kh) {
          for (std::uint32_t kw = 0; kw < k; ++kw) {
            const std::int32_t wv = w_ch[kh * k + kw];
            if (wv == 0) continue;
            for (std::uint32_t y = 0; y < oh; ++y) {
              const std::int8_t* row = in_ch + static_cast<std::size_t>(y + kh) * w + kw;
              std::int32_t* acc_row = acc + static_cast<std::size_t>(y) * ow;
              for (std::uint32_t x = 0; x < ow; ++x) acc_row[x] += wv * row[x];
            }
          }
        }
      }
    }
  }
}

void maxpool_raw(const std::int8_t* in, std::uint32_t n, std::uint32_t c, std::uint32_t h,
                 std::uint32_t w, std::uint32_t pool, std::int8_t* out) {
  const std::uint32_t oh = h / pool;
  const std::uint32_t ow = w / pool;
  std::size_t oi = 0;
  for (std::uint32_t img = 0; img < n; ++img) {
    for (std::uint32_t ch = 0; ch < c; ++ch) {
      const std::int8_t* plane =
          in + (static_cast<std::size_t>(img) * c + ch) * h * w;
      for (std::uint32_t y = 0; y < oh; ++y) {
        for (std::uint32_t x = 0; x < ow; ++x) {
          std::int8_t best = plane[static_cast<std::size_t>(y * pool) * w + x * pool];
          for (std::uint32_t py = 0; py < pool; ++py) {
            for (std::uint32_t px = 0; px < pool; ++px) {
              best = std::max(best,
                              plane[static_cast<std::size_t>(y * pool + py) * w + x * pool + px]);
            }
          }
          out[oi++] = best;
        }
      }
    }
  }
}

void fc_raw(const std::int8_t* in, std::uint32_t n, std::uint32_t in_features,
            const std::int8_t* weights, std::uint32_t out_features, std::int32_t* out) {
  for (std::uint32_t img = 0; img < n; ++img) {
    const std::int8_t* x = in + static_cast<std::size_t>(img) * in_features;
    std::int32_t* y = out + static_cast<std::size_t>(img) * out_features;
    for (std::uint32_t o = 0; o < out_features; ++o) {
      const std::int8_t* row = weights + static_cast<std::size_t>(o) * in_features;
      std::int32_t acc = 0;
      for (std::uint32_t i = 0; i < in_features; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
  }
}

void pack_levels(const std::int8_t* levels, std::size_t n, int bit_width,
                 std::uint8_t* out_bytes) {
  const std::size_t bytes = (n * bit_width + 7) / 8;
  std::fill(out_bytes, out_bytes + bytes, 0);
  if (bit_width == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      if (levels[i] < 0) out_bytes[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned raw = static_cast<unsigned>(levels[i]) & 3u;
      const std::size_t base = i * 2;
      out_bytes[base >> 3] |= static_cast<std::uint8_t>(raw << (base & 7));
    }
  }
}

void unpack_levels(const std::uint8_t* bytes, std::size_t n, int bit_width, std::int8_t* out) {
  if (bit_width == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = (bytes[i >> 3] >> (i & 7)) & 1u ? -1 : 1;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t base = i * 2;
      const unsigned raw = (bytes[base >> 3] >> (base & 7)) & 3u;
      out[i] = static_cast<std::int8_t>(static_cast<int>(raw ^ 2u) - 2);
    }
  }
}

}  // namespace detail

namespace {

std::vector<std::int8_t> decode(const QuantTensor& t) {
  std::vector<std::int8_t> v;
  t.decode_into(v);
  return v;
}

}  // namespace

RealTensor conv2d_forward(const QuantTensor& input, const QuantTensor& weights,
                          const LayerSpec& spec) {
  const Dims& in = input.dims();
  const Dims wd = spec.weight_dims();
  if (weights.dims() != wd) throw shape_error("conv weight dims mismatch");
  const Dims out_dims = layer_output_dims(spec, in);
  const auto in8 = decode(input);
  const auto w8 = decode(weights);
  std::vector<std::int32_t> acc(element_count(out_dims));
  detail::conv2d_raw(in8.data(), in[0], in[1], in[2], in[3], w8.data(), spec.out_channels,
                     spec.kernel, acc.data());
  RealTensor out(out_dims);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<double>(acc[i]);
  return out;
}

QuantTensor maxpool2d(const QuantTensor& input, const LayerSpec& spec) {
  const Dims out_dims = layer_output_dims(spec, input.dims());
  const auto in8 = decode(input);
  std::vector<std::int8_t> out8(element_count(out_dims));
  detail::maxpool_raw(in8.data(), input.dims()[0], input.dims()[1], input.dims()[2],
                      input.dims()[3], spec.pool, out8.data());
  QuantTensor out(out_dims, input.bit_width());
  for (std::size_t i = 0; i < out8.size(); ++i) out.set(i, out8[i]);
  return out;
}

RealTensor maxpool2d(const RealTensor& input, const LayerSpec& spec) {
  const Dims out_dims = layer_output_dims(spec, input.dims);
  RealTensor out(out_dims);
  const std::uint32_t pool = spec.pool;
  const Dims& in = input.dims;
  std::size_t oi = 0;
  for (std::uint32_t img = 0; img < in[0]; ++img) {
    for (std::uint32_t ch = 0; ch < in[1]; ++ch) {
      const double* plane =
          input.data.data() + (static_cast<std::size_t>(img) * in[1] + ch) * in[2] * in[3];
      for (std::uint32_t y = 0; y < in[2] / pool; ++y) {
        for (std::uint32_t x = 0; x < in[3] / pool; ++x) {
          double best = plane[static_cast<std::size_t>(y * pool) * in[3] + x * pool];
          for (std::uint32_t py = 0; py < pool; ++py) {
            for (std::uint32_t px = 0; px < pool; ++px) {
              best = std::max(best,
                              plane[static_cast<std::size_t>(y * pool + py) * in[3] + x * pool + px]);
            }
          }
          out[oi++] = best;
        }
      }
    }
  }
  return out;
}

RealTensor fully_connected_forward(const QuantTensor& input, const QuantTensor& weights,
                                   const LayerSpec& spec) {
  const Dims& in = input.dims();
  if (weights.dims() != spec.weight_dims()) throw shape_error("fc weight dims mismatch");
  const Dims out_dims = layer_output_dims(spec, in);
  const auto in8 = decode(input);
  const auto w8 = decode(weights);
  std::vector<std::int32_t> acc(element_count(out_dims));
  detail::fc_raw(in8.data(), in[0], spec.in_features, w8.data(), spec.out_features, acc.data());
  RealTensor out(out_dims);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<double>(acc[i]);
  return out;
}

void BitMask::flip(std::size_t bit) {
  if (bit >= bits) throw invalid_value_error("mask bit out of range");
  const std::uint8_t m = static_cast<std::uint8_t>(1u << (bit & 7));
  bytes[bit >> 3] ^= m;
  set_count += (bytes[bit >> 3] & m) ? 1 : -1;
}

QuantTensor quant_activation(const RealTensor& pre_act, int bit_width, const BitMask& mask) {
  QuantTensor q(pre_act.dims, bit_width);
  if (mask.bits != q.bit_count()) throw shape_error("mask length mismatch");
  Rng unused(0);
  for (std::size_t i = 0; i < pre_act.size(); ++i) {
    q.set(i, quantize_level(pre_act[i], bit_width, QuantMode::Deterministic, unused));
  }
  if (mask.any()) {
    for (std::size_t b = 0; b < q.bytes().size(); ++b) q.bytes()[b] ^= mask.bytes[b];
  }
  return q;
}

}  // namespace qfi
