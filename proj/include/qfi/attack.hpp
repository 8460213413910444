#pragma once

#include "qfi/fault.hpp"
#include "qfi/network.hpp"

namespace qfi {

struct AttackBudget {
  std::size_t max_flips = 1;  // Hamming-distance cap between pre- and post-fault weights
};

struct AttackResult {
  std::vector<std::size_t> flipped_bits;  // committed flips, in commit order
  std::vector<double> loss_trace;         // mean loss before any flip, then after each commit
};

// Greedy bit search maximizing the loss increase of the perturbed network.
// Each step evaluates candidate weight-bit flips and commits the one with the
// largest mean-loss increase (ties to the lowest index); stops at the flip
// budget or when no candidate increases the loss.
//
// Candidates: every bit when the weight space has at most 2^12 bits (the
// exhaustive regime); otherwise 4096 seeded-random bits per step plus the
// immediate neighbors of previously committed flips. Loss is evaluated on the
// first min(64, |dataset|) samples.
//
// The input network is not modified; the search runs on a private clone.
AttackResult bit_search_attack(const NetworkModel& net,
                               const std::vector<TrainingSample>& dataset,
                               const AttackBudget& budget, std::uint64_t seed = 0);

}  // namespace qfi
