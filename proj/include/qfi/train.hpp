#pragma once

#include "qfi/network.hpp"
#include "qfi/quantize.hpp"
#include "qfi/rng.hpp"

namespace qfi {

struct TrainConfig {
  int epochs = 20;
  double lr = 0.05;
  int batch_size = 32;
  QuantMode weight_mode = QuantMode::Deterministic;
};

struct TrainResult {
  std::vector<RealTensor> shadow;         // real-valued shadow weights per param tensor
  std::vector<double> epoch_loss;        // mean cross-entropy after each epoch
  std::vector<double> epoch_accuracy;    // training-set accuracy after each epoch
};

// Mini-batch gradient descent on real-valued shadow weights with a
// straight-through estimator through the quantizers. The quantized network
// parameters are refreshed from the shadow weights after every batch; shadow
// weights are clipped to [-1, 1] after every update. Deterministic per seed.
//
// lr == 0 is a legal no-op (weights stay at their initialization); lr < 0 and
// an empty dataset are errors.
TrainResult train(NetworkModel& net, const std::vector<TrainingSample>& data,
                  const TrainConfig& cfg, Rng& rng);

// Loss (temperature-scaled cross-entropy, the trainer's objective) and its
// gradient w.r.t. shadow weights for one sample. surrogate_forward replaces
// every quantizer by its straight-through surrogate (a continuous clipped
// ramp), which makes the backward pass the exact gradient of the forward —
// the hook the finite-difference check relies on.
double shadow_loss(const NetworkModel& net, const std::vector<RealTensor>& shadow,
                   const TrainingSample& sample, bool surrogate_forward,
                   std::vector<RealTensor>* grad_out);

}  // namespace qfi
