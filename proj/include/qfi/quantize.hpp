#pragma once

#include "qfi/rng.hpp"
#include "qfi/tensor.hpp"

namespace qfi {

enum class QuantMode { Deterministic, Stochastic };

// Sign binarization: +1 iff w_real >= 0, else -1.
int quantize_deterministic(double w_real);

// clip((w_real + 1) / 2, 0, 1).
double hard_sigmoid(double w_real);

// +1 with probability hard_sigmoid(w_real), -1 otherwise.
int quantize_stochastic(double w_real, Rng& rng);

// Scalar quantization to the bit width's level set.
// 1-bit: sign rule (or stochastic). 2-bit: round-half-away-from-zero of
// clip(2x, -2, 1); stochastic mode uses stochastic rounding of the same clip.
int quantize_level(double w_real, int bit_width, QuantMode mode, Rng& rng);

// Elementwise tensor quantization, row-major draw order in stochastic mode.
QuantTensor quantize_tensor(const RealTensor& t, int bit_width, QuantMode mode, Rng& rng);
QuantTensor quantize_tensor(const RealTensor& t, int bit_width);  // deterministic

}  // namespace qfi
