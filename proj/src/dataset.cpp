#include "qfi/dataset.hpp"

#include <cmath>
#include <fstream>

namespace qfi {

Dataset load_cifar10(const std::string& path, std::size_t limit) {
  constexpr std::size_t kRecord = 3073;
  constexpr std::size_t kPixels = 3072;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open '" + path + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  if (buf.empty() || buf.size() % kRecord != 0) {
    throw io_error("file length " + std::to_string(buf.size()) + " is not a multiple of 3073");
  }
  const std::size_t records = buf.size() / kRecord;
  const std::size_t take = limit == 0 ? records : std::min(limit, records);

  Dataset ds;
  ds.source = "cifar10";
  ds.samples.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    const unsigned char* rec = buf.data() + r * kRecord;
    if (rec[0] > 9) throw io_error("label byte " + std::to_string(rec[0]) + " out of range");
    TrainingSample s;
    s.label = rec[0];
    s.image = RealTensor({1, 3, 32, 32});
    for (std::size_t p = 0; p < kPixels; ++p) {
      s.image[p] = static_cast<double>(rec[1 + p]) / 127.5 - 1.0;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset synth_dataset(std::size_t n, int class_count, Rng& rng, Dims image_dims) {
  if (n == 0) throw invalid_value_error("synthetic dataset size must be positive");
  if (class_count < 2 || class_count > 10) {
    throw invalid_value_error("class count must be in [2,10]");
  }
  const std::uint32_t channels = image_dims[1];
  const std::uint32_t height = image_dims[2];
  const std::uint32_t width = image_dims[3];

  // Blob centers on a grid with a margin so every blob fits.
  int cols = 1;
  while (cols * cols < class_count) ++cols;
  const int rows = (class_count + cols - 1) / cols;
  const double sigma = static_cast<double>(std::min(height, width)) / 8.0;
  const double margin = 2.0 * sigma;

  std::vector<std::pair<double, double>> centers(static_cast<std::size_t>(class_count));
  for (int c = 0; c < class_count; ++c) {
    const int gy = c / cols;
    const int gx = c % cols;
    const double cy =
        rows == 1 ? height / 2.0 : margin + (height - 1 - 2 * margin) * gy / (rows - 1);
    const double cx =
        cols == 1 ? width / 2.0 : margin + (width - 1 - 2 * margin) * gx / (cols - 1);
    centers[static_cast<std::size_t>(c)] = {cy, cx};
  }

  Dataset ds;
  ds.source = "synthetic";
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(class_count));
    const auto [cy, cx] = centers[static_cast<std::size_t>(label)];
    TrainingSample s;
    s.label = label;
    s.image = RealTensor(image_dims);
    // Small per-sample jitter keeps samples distinct without moving the blob
    // across the quantization threshold far from its edge.
    const double jy = rng.uniform(-0.5, 0.5);
    const double jx = rng.uniform(-0.5, 0.5);
    std::size_t p = 0;
    for (std::uint32_t ch = 0; ch < channels; ++ch) {
      const double emphasis =
          ch == static_cast<std::uint32_t>(label) % channels ? 1.0 : 0.55;
      for (std::uint32_t y = 0; y < height; ++y) {
        for (std::uint32_t x = 0; x < width; ++x) {
          const double dy = (y - cy - jy) / sigma;
          const double dx = (x - cx - jx) / sigma;
          const double bump = 2.2 * emphasis * std::exp(-0.5 * (dy * dy + dx * dx));
          double v = -1.0 + bump + 0.08 * rng.normal();
          if (v > 1.0) v = 1.0;
          if (v < -1.0) v = -1.0;
          s.image[p++] = v;
        }
      }
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace qfi
