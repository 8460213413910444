#include "qfi/attack.hpp"

#include <algorithm>
#include <set>

namespace qfi {

namespace {

constexpr std::size_t kExhaustiveLimit = std::size_t{1} << 12;
constexpr std::size_t kSampledCandidates = 4096;
constexpr std::size_t kEvalSamples = 64;

}  // namespace

AttackResult bit_search_attack(const NetworkModel& net,
                               const std::vector<TrainingSample>& dataset,
                               const AttackBudget& budget, std::uint64_t seed) {
  if (budget.max_flips < 1) throw invalid_value_error("flip budget must be at least 1");
  if (dataset.empty()) throw invalid_value_error("empty dataset");

  const std::vector<TrainingSample> eval(
      dataset.begin(), dataset.begin() + static_cast<std::ptrdiff_t>(
                                             std::min(dataset.size(), kEvalSamples)));

  NetworkModel work = net;
  const BitAddressSpace space = build_address_space(work, FaultDomain::Weight);
  if (space.size == 0) throw invalid_value_error("network has no weight bits");
  const bool exhaustive = space.size <= kExhaustiveLimit;

  AttackResult result;
  result.loss_trace.push_back(mean_loss(work, eval));

  Rng rng(mix_seed(seed, 0x6266615f73656564ULL));
  std::set<std::size_t> committed;

  for (std::size_t step = 0; step < budget.max_flips; ++step) {
    std::vector<std::size_t> candidates;
    if (exhaustive) {
      candidates.reserve(space.size);
      for (std::size_t b = 0; b < space.size; ++b) {
        if (!committed.count(b)) candidates.push_back(b);
      }
    } else {
      std::set<std::size_t> pool;
      while (pool.size() < kSampledCandidates && pool.size() < space.size - committed.size()) {
        const std::size_t b = rng.below(space.size);
        if (!committed.count(b)) pool.insert(b);
      }
      for (std::size_t b : committed) {
        if (b > 0 && !committed.count(b - 1)) pool.insert(b - 1);
        if (b + 1 < space.size && !committed.count(b + 1)) pool.insert(b + 1);
      }
      candidates.assign(pool.begin(), pool.end());
    }

    const double base = result.loss_trace.back();
    double best_loss = base;
    std::size_t best_bit = space.size;  // sentinel: nothing found
    for (std::size_t bit : candidates) {
      flip_bit(work, space, bit);
      const double loss = mean_loss(work, eval);
      flip_bit(work, space, bit);  // involution restores
      if (loss > best_loss) {
        best_loss = loss;
        best_bit = bit;
      }
    }
    if (best_bit == space.size) break;  // no candidate increases the loss

    flip_bit(work, space, best_bit);
    committed.insert(best_bit);
    result.flipped_bits.push_back(best_bit);
    result.loss_trace.push_back(best_loss);
  }
  return result;
}

}  // namespace qfi
