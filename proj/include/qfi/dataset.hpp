#pragma once

#include <string>
#include <vector>

#include "qfi/network.hpp"
#include "qfi/rng.hpp"

namespace qfi {

struct Dataset {
  std::vector<TrainingSample> samples;
  std::string source;  // "cifar10" | "synthetic"
};

// CIFAR-10 binary batch: 3073-byte records, 1 label byte then 1024 R, 1024 G,
// 1024 B bytes row-major 32x32. Pixels map to [-1,1] via x/127.5 - 1.
// Reads the first `limit` records (0 = all).
Dataset load_cifar10(const std::string& path, std::size_t limit);

// Class-conditional Gaussian blobs rendered as images: one bright blob per
// class at a class-specific position with a class-specific channel emphasis,
// plus light pixel noise. Balanced round-robin labels, deterministic per seed.
Dataset synth_dataset(std::size_t n, int class_count, Rng& rng, Dims image_dims = {1, 3, 12, 12});

}  // namespace qfi
