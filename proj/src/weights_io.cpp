#include "qfi/weights_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "qfi/topology.hpp"

namespace qfi {

namespace {

constexpr char kMagic[4] = {'Q', 'N', 'F', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

struct Reader {
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw io_error("truncated payload");
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(buf[pos]) |
                      (static_cast<std::uint32_t>(buf[pos + 1]) << 8) |
                      (static_cast<std::uint32_t>(buf[pos + 2]) << 16) |
                      (static_cast<std::uint32_t>(buf[pos + 3]) << 24);
    pos += 4;
    return v;
  }
};

std::array<std::uint32_t, 4> layer_extents(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::Conv2d: return {s.out_channels, s.in_channels, s.kernel, s.kernel};
    case LayerKind::MaxPool2d: return {s.pool, 1, 1, 1};
    case LayerKind::FullyConnected: return {s.out_features, s.in_features, 1, 1};
    case LayerKind::QuantActivation: return s.out_dims;
  }
  throw io_error("unknown layer kind");
}

LayerSpec spec_from_record(std::uint8_t kind, const std::array<std::uint32_t, 4>& e,
                           std::uint8_t bw) {
  LayerSpec s;
  switch (kind) {
    case 0:
      s.kind = LayerKind::Conv2d;
      s.out_channels = e[0];
      s.in_channels = e[1];
      s.kernel = e[2];
      if (e[3] != e[2]) throw io_error("non-square conv kernel record");
      s.weight_bits = bw;
      break;
    case 1:
      s.kind = LayerKind::MaxPool2d;
      s.pool = e[0];
      break;
    case 2:
      s.kind = LayerKind::FullyConnected;
      s.out_features = e[0];
      s.in_features = e[1];
      s.weight_bits = bw;
      break;
    case 3:
      s.kind = LayerKind::QuantActivation;
      s.out_dims = e;
      s.activation_bits = bw;
      break;
    default:
      throw io_error("unknown layer kind code " + std::to_string(kind));
  }
  return s;
}

// Input dims are not part of the format; recover them from the leading layer
// (a conv's spatial extent comes from its following activation record).
Dims derive_input_dims(const std::vector<LayerSpec>& layers) {
  if (layers.empty()) throw io_error("empty layer list");
  const LayerSpec& first = layers.front();
  switch (first.kind) {
    case LayerKind::Conv2d: {
      for (std::size_t i = 1; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::QuantActivation) {
          const Dims& d = layers[i].out_dims;
          return {1, first.in_channels, d[2] + first.kernel - 1, d[3] + first.kernel - 1};
        }
        if (layers[i].has_weights() || layers[i].kind == LayerKind::MaxPool2d) break;
      }
      throw io_error("cannot derive input dims: leading conv has no activation record");
    }
    case LayerKind::FullyConnected:
      return {1, first.in_features, 1, 1};
    case LayerKind::QuantActivation:
      return first.out_dims;
    case LayerKind::MaxPool2d:
      throw io_error("cannot derive input dims: leading pool layer");
  }
  throw io_error("unknown layer kind");
}

// Matches the loaded plan against the known architectures so the model keeps
// its canonical name (scenario ids depend on it).
std::string recover_name(int weight_bits, int activation_bits,
                         const std::vector<LayerSpec>& layers, const Dims& input_dims) {
  const TopologyDescriptor candidates[] = {
      cnv_descriptor(weight_bits, activation_bits),
      toy_descriptor(weight_bits, activation_bits),
  };
  auto same_spec = [](const LayerSpec& a, const LayerSpec& b) {
    return a.kind == b.kind && a.in_channels == b.in_channels &&
           a.out_channels == b.out_channels && a.kernel == b.kernel && a.pool == b.pool &&
           a.in_features == b.in_features && a.out_features == b.out_features &&
           a.out_dims == b.out_dims && a.weight_bits == b.weight_bits &&
           a.activation_bits == b.activation_bits;
  };
  for (const TopologyDescriptor& d : candidates) {
    if (d.input_dims != input_dims || d.layers.size() != layers.size()) continue;
    bool all = true;
    for (std::size_t i = 0; i < layers.size() && all; ++i) all = same_spec(d.layers[i], layers[i]);
    if (all) return d.name;
  }
  return "custom";
}

}  // namespace

void save_weights(const NetworkModel& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(net.layers.size()));
  std::size_t pi = 0;
  for (const LayerSpec& spec : net.layers) {
    os.put(static_cast<char>(spec.kind));
    for (std::uint32_t e : layer_extents(spec)) put_u32(os, e);
    int bw = 0;
    if (spec.has_weights()) bw = spec.weight_bits;
    if (spec.kind == LayerKind::QuantActivation) bw = spec.activation_bits;
    os.put(static_cast<char>(bw));
    if (spec.has_weights()) {
      const auto& bytes = net.param(pi++).bytes();
      os.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    }
  }
  if (!os) throw io_error("write failed for '" + path + "'");
}

NetworkModel load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open '" + path + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  Reader r{buf};

  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw io_error("bad magic");
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw io_error("unsupported version " + std::to_string(version));
  const std::uint32_t layer_count = r.u32();

  std::vector<LayerSpec> layers;
  std::vector<QuantTensor> tensors;
  layers.reserve(layer_count);
  for (std::uint32_t li = 0; li < layer_count; ++li) {
    const std::uint8_t kind = r.u8();
    std::array<std::uint32_t, 4> e{};
    for (auto& x : e) x = r.u32();
    const std::uint8_t bw = r.u8();
    LayerSpec spec = spec_from_record(kind, e, bw);
    if (spec.has_weights()) {
      QuantTensor t(spec.weight_dims(), spec.weight_bits);
      r.need(t.byte_count());
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(r.pos),
                buf.begin() + static_cast<std::ptrdiff_t>(r.pos + t.byte_count()),
                t.bytes().begin());
      r.pos += t.byte_count();
      // zero padding is an invariant of the packed form
      for (std::size_t b = t.bit_count(); b < t.byte_count() * 8; ++b) {
        if (t.storage_bit(b)) throw io_error("nonzero padding bits");
      }
      tensors.push_back(std::move(t));
    }
    layers.push_back(std::move(spec));
  }
  if (r.pos != buf.size()) throw io_error("trailing bytes after last layer");

  const Dims input_dims = derive_input_dims(layers);
  int weight_bits = 1;
  int activation_bits = 1;
  for (const LayerSpec& s : layers) {
    if (s.has_weights()) {
      weight_bits = s.weight_bits;
      break;
    }
  }
  for (const LayerSpec& s : layers) {
    if (s.kind == LayerKind::QuantActivation) {
      activation_bits = s.activation_bits;
      break;
    }
  }
  NetworkModel net = NetworkModel::build(recover_name(weight_bits, activation_bits, layers, input_dims),
                                         weight_bits, activation_bits, input_dims, layers);
  for (std::size_t i = 0; i < tensors.size(); ++i) net.set_param(i, std::move(tensors[i]));
  net.validate();
  return net;
}

}  // namespace qfi
