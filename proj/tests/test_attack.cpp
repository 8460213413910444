#include <doctest.h>

#include "qfi/attack.hpp"
#include "qfi/dataset.hpp"

using namespace qfi;

namespace {

// fc(2->2), 4 weight bits total, with weights that make one flip clearly best.
NetworkModel fc4_net() {
  LayerSpec fc;
  fc.kind = LayerKind::FullyConnected;
  fc.in_features = 2;
  fc.out_features = 2;
  fc.weight_bits = 1;
  NetworkModel net = NetworkModel::build("fc4", 1, 1, {1, 2, 1, 1}, {fc});
  QuantTensor w = net.param(0);
  w.set(0, 1);
  w.set(1, 1);
  w.set(2, -1);
  w.set(3, -1);
  net.set_param(0, w);
  return net;
}

std::vector<TrainingSample> two_class_points() {
  std::vector<TrainingSample> data;
  for (int i = 0; i < 8; ++i) {
    TrainingSample s;
    s.image = RealTensor({1, 2, 1, 1});
    s.image[0] = i % 2 == 0 ? 0.9 : -0.9;
    s.image[1] = i % 2 == 0 ? 0.9 : -0.9;
    s.label = i % 2;
    data.push_back(s);
  }
  return data;
}

}  // namespace

TEST_CASE("budget-1 greedy equals the exhaustive best flip on a 4-bit net") {
  const NetworkModel net = fc4_net();
  const auto data = two_class_points();

  // exhaustive oracle over all four bits
  const BitAddressSpace space = build_address_space(net, FaultDomain::Weight);
  double best_loss = mean_loss(net, data);
  std::size_t best_bit = space.size;
  for (std::size_t bit = 0; bit < space.size; ++bit) {
    NetworkModel flipped = net;
    flip_bit(flipped, space, bit);
    const double loss = mean_loss(flipped, data);
    if (loss > best_loss) {
      best_loss = loss;
      best_bit = bit;
    }
  }
  REQUIRE(best_bit != space.size);

  const AttackResult result = bit_search_attack(net, data, AttackBudget{1});
  REQUIRE(result.flipped_bits.size() == 1);
  CHECK(result.flipped_bits[0] == best_bit);
  CHECK(result.loss_trace.back() == doctest::Approx(best_loss).epsilon(1e-12));
}

TEST_CASE("budget below 1 is rejected") {
  CHECK_THROWS_AS(bit_search_attack(fc4_net(), two_class_points(), AttackBudget{0}),
                  invalid_value_error);
  CHECK_THROWS_AS(bit_search_attack(fc4_net(), {}, AttackBudget{1}), invalid_value_error);
}

TEST_CASE("loss trace is monotone non-decreasing and respects the budget") {
  Rng rng(404);
  const Dataset ds = synth_dataset(24, 4, rng);
  const NetworkModel net = build_toy();
  const AttackResult result = bit_search_attack(net, ds.samples, AttackBudget{6});
  CHECK(result.flipped_bits.size() <= 6);
  for (std::size_t i = 1; i < result.loss_trace.size(); ++i) {
    CHECK(result.loss_trace[i] >= result.loss_trace[i - 1]);
  }
  // committed flips are distinct: Hamming distance equals the flip count
  std::set<std::size_t> unique(result.flipped_bits.begin(), result.flipped_bits.end());
  CHECK(unique.size() == result.flipped_bits.size());
  CHECK(result.loss_trace.size() == result.flipped_bits.size() + 1);
}

TEST_CASE("the input network is left untouched") {
  const NetworkModel net = fc4_net();
  const NetworkModel copy = net;
  (void)bit_search_attack(net, two_class_points(), AttackBudget{2});
  CHECK(net == copy);
}
