#pragma once

#include <string>

#include "qfi/network.hpp"

namespace qfi {

// QNFW weight file, little-endian throughout:
//   "QNFW" | u32 version=1 | u32 layer_count |
//   per layer { u8 kind | 4 x u32 extents | u8 bit_width | packed bits, byte padded }
//
// Extents per kind:
//   Conv2d:          (out_channels, in_channels, kernel, kernel), payload = weights
//   MaxPool2d:       (pool, 1, 1, 1), no payload
//   FullyConnected:  (out_features, in_features, 1, 1), payload = weights
//   QuantActivation: (1, C, H, W) of the per-image buffer, no payload
//
// Activation masks are not persisted: a loaded network is fault-free.
void save_weights(const NetworkModel& net, const std::string& path);
NetworkModel load_weights(const std::string& path);

}  // namespace qfi
