#include "qfi/quantize.hpp"

#include <cmath>

namespace qfi {

namespace {

void require_finite(double v) {
  if (!std::isfinite(v)) throw invalid_value_error("non-finite input to quantizer");
}

double clip(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

int quantize_deterministic(double w_real) {
  require_finite(w_real);
  return w_real >= 0.0 ? 1 : -1;
}

double hard_sigmoid(double w_real) {
  require_finite(w_real);
  return clip((w_real + 1.0) / 2.0, 0.0, 1.0);
}

int quantize_stochastic(double w_real, Rng& rng) {
  const double p = hard_sigmoid(w_real);
  return rng.unit() < p ? 1 : -1;
}

int quantize_level(double w_real, int bit_width, QuantMode mode, Rng& rng) {
  require_finite(w_real);
  if (bit_width == 1) {
    return mode == QuantMode::Deterministic ? quantize_deterministic(w_real)
                                            : quantize_stochastic(w_real, rng);
  }
  if (bit_width != 2) throw invalid_value_error("unsupported bit width");
  const double y = clip(2.0 * w_real, -2.0, 1.0);
  if (mode == QuantMode::Deterministic) {
    // round half away from zero
    return static_cast<int>(y >= 0.0 ? std::floor(y + 0.5) : std::ceil(y - 0.5));
  }
  const double f = std::floor(y);
  if (f == y) return static_cast<int>(f);
  return static_cast<int>(f) + (rng.unit() < (y - f) ? 1 : 0);
}

QuantTensor quantize_tensor(const RealTensor& t, int bit_width, QuantMode mode, Rng& rng) {
  QuantTensor q(t.dims, bit_width);
  for (std::size_t i = 0; i < t.size(); ++i) {
    q.set(i, quantize_level(t[i], bit_width, mode, rng));
  }
  return q;
}

QuantTensor quantize_tensor(const RealTensor& t, int bit_width) {
  Rng unused(0);
  return quantize_tensor(t, bit_width, QuantMode::Deterministic, unused);
}

}  // namespace qfi
