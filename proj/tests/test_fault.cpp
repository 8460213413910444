#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <sstream>

#include "qfi/fault.hpp"

using namespace qfi;

namespace {

NetworkModel fc22_net() {
  LayerSpec fc;
  fc.kind = LayerKind::FullyConnected;
  fc.in_features = 2;
  fc.out_features = 2;
  fc.weight_bits = 1;
  return NetworkModel::build("fc22", 1, 1, {1, 2, 1, 1}, {fc});
}

}  // namespace

TEST_CASE("address space sizes") {
  const NetworkModel cnv = build_cnv(1, 1);
  CHECK(build_address_space(cnv, FaultDomain::Weight).size == 1542848);
  CHECK(build_address_space(cnv, FaultDomain::Weight, 1).size == 1728);
  CHECK(build_address_space(cnv, FaultDomain::Activation).size == 142592);
  CHECK(build_address_space(cnv, FaultDomain::Activation, 1).size == 57600);
  CHECK(build_address_space(fc22_net(), FaultDomain::Weight).size == 4);
  // fc3 output is not quantized: no activation buffer in layer 9
  CHECK_THROWS_AS(build_address_space(cnv, FaultDomain::Activation, 9), invalid_value_error);
  CHECK_THROWS_AS(build_address_space(cnv, FaultDomain::Weight, 10), invalid_value_error);
}

TEST_CASE("segments are contiguous, ordered, and cover the space") {
  const NetworkModel cnv = build_cnv(2, 2);
  const BitAddressSpace space = build_address_space(cnv, FaultDomain::Weight);
  std::size_t expect_start = 0;
  for (const auto& seg : space.segments) {
    CHECK(seg.start == expect_start);
    expect_start += seg.length;
  }
  CHECK(expect_start == space.size);
  CHECK(space.segments.size() == 9);
}

TEST_CASE("flip_bit flips exactly one storage bit") {
  NetworkModel net = fc22_net();
  const BitAddressSpace space = build_address_space(net, FaultDomain::Weight);
  const NetworkModel original = net;
  // all-+1 1-bit weights pack to a zero byte; flipping bit 3 gives 0x08
  CHECK(net.param(0).bytes()[0] == 0x00);
  flip_bit(net, space, 3);
  CHECK(net.param(0).bytes()[0] == 0x08);
  CHECK(net.param(0).get(3) == -1);
  flip_bit(net, space, 3);
  CHECK(net == original);
  CHECK_THROWS_AS(flip_bit(net, space, 4), invalid_value_error);
}

TEST_CASE("2-bit weight +1 becomes -1 when its sign bit flips") {
  LayerSpec fc;
  fc.kind = LayerKind::FullyConnected;
  fc.in_features = 2;
  fc.out_features = 1;
  fc.weight_bits = 2;
  NetworkModel net = NetworkModel::build("fc2b", 2, 2, {1, 2, 1, 1}, {fc});
  QuantTensor t = net.param(0);
  t.set(0, 1);
  net.set_param(0, t);
  const BitAddressSpace space = build_address_space(net, FaultDomain::Weight);
  flip_bit(net, space, 1);  // the MSB of element 0
  CHECK(net.param(0).get(0) == -1);
}

TEST_CASE("MBU flips an 8-bit burst, truncated at the space end") {
  const NetworkModel base = build_toy();
  const BitAddressSpace space = build_address_space(base, FaultDomain::Weight);

  NetworkModel net = base;
  inject_mbu(net, space, 0);
  int changed = 0;
  for (std::size_t b = 0; b < 16; ++b) {
    if (net.param(0).storage_bit(b) != base.param(0).storage_bit(b)) ++changed;
  }
  CHECK(changed == 8);
  CHECK(net.param(0).bytes()[0] == 0xFF);  // zero byte fully inverted

  NetworkModel net2 = base;
  inject_mbu(net2, space, space.size - 3);
  std::size_t flipped = 0;
  for (std::size_t p = 0; p < net2.param_count(); ++p) {
    for (std::size_t b = 0; b < net2.param(p).bit_count(); ++b) {
      if (net2.param(p).storage_bit(b) != base.param(p).storage_bit(b)) ++flipped;
    }
  }
  CHECK(flipped == 3);

  NetworkModel net3 = base;
  inject_mbu(net3, space, 100);
  inject_mbu(net3, space, 100);
  CHECK(net3 == base);
  CHECK_THROWS_AS(inject_mbu(net3, space, space.size), invalid_value_error);
}

TEST_CASE("MBU bursts may straddle layer segments") {
  NetworkModel net = build_toy();  // layer 1 weights end at bit 324
  const NetworkModel base = net;
  const BitAddressSpace space = build_address_space(net, FaultDomain::Weight);
  inject_mbu(net, space, 320);
  int changed_l1 = 0, changed_l2 = 0;
  for (std::size_t b = 0; b < net.param(0).bit_count(); ++b) {
    if (net.param(0).storage_bit(b) != base.param(0).storage_bit(b)) ++changed_l1;
  }
  for (std::size_t b = 0; b < net.param(1).bit_count(); ++b) {
    if (net.param(1).storage_bit(b) != base.param(1).storage_bit(b)) ++changed_l2;
  }
  CHECK(changed_l1 == 4);
  CHECK(changed_l2 == 4);
}

TEST_CASE("activation faults set persistent mask bits") {
  NetworkModel net = build_toy();
  const BitAddressSpace space = build_address_space(net, FaultDomain::Activation);
  CHECK(space.size == 1200);
  flip_bit(net, space, 17);
  CHECK(net.mask(0).test(17));
  CHECK_FALSE(net.masks_all_zero());
  flip_bit(net, space, 17);
  CHECK(net.masks_all_zero());
}

TEST_CASE("locality: events touch only their own bits") {
  Rng rng(500);
  const NetworkModel base = build_toy();
  const BitAddressSpace space = build_address_space(base, FaultDomain::Weight);
  for (int iter = 0; iter < 200; ++iter) {
    NetworkModel net = base;
    const std::size_t start = rng.below(space.size);
    const bool mbu = rng.below(2) == 1;
    if (mbu) {
      inject_mbu(net, space, start);
    } else {
      flip_bit(net, space, start);
    }
    const std::size_t burst = mbu ? std::min<std::size_t>(8, space.size - start) : 1;
    std::size_t global = 0;
    for (std::size_t p = 0; p < net.param_count(); ++p) {
      for (std::size_t b = 0; b < net.param(p).bit_count(); ++b, ++global) {
        const bool inside = global >= start && global < start + burst;
        const bool differs = net.param(p).storage_bit(b) != base.param(p).storage_bit(b);
        CHECK(differs == inside);
      }
    }
  }
}

TEST_CASE("involution: 10k random events applied twice restore the network") {
  Rng rng(600);
  const NetworkModel base = build_toy();
  NetworkModel net = base;
  const BitAddressSpace wspace = build_address_space(net, FaultDomain::Weight);
  const BitAddressSpace aspace = build_address_space(net, FaultDomain::Activation);
  for (int iter = 0; iter < 10000; ++iter) {
    const bool weight = rng.below(2) == 0;
    const BitAddressSpace& space = weight ? wspace : aspace;
    const std::size_t bit = rng.below(space.size);
    if (rng.below(2) == 0) {
      flip_bit(net, space, bit);
      flip_bit(net, space, bit);
    } else {
      inject_mbu(net, space, bit);
      inject_mbu(net, space, bit);
    }
  }
  CHECK(net == base);
}

TEST_CASE("schedules: determinism, sorting, sizing") {
  const NetworkModel net = build_toy();
  const BitAddressSpace space = build_address_space(net, FaultDomain::Weight);

  Rng r0(42);
  CHECK(schedule_uniform(space, 0, 10, FaultMode::SEU, r0).events.empty());

  Rng a(42), b(42);
  const FaultSchedule sa = schedule_uniform(space, 100, 50, FaultMode::MBU, a);
  const FaultSchedule sb = schedule_uniform(space, 100, 50, FaultMode::MBU, b);
  REQUIRE(sa.events.size() == 100);
  bool identical = true;
  for (std::size_t i = 0; i < sa.events.size(); ++i) {
    identical = identical && sa.events[i].bit_index == sb.events[i].bit_index &&
                sa.events[i].time == sb.events[i].time && sa.events[i].mode == sb.events[i].mode;
  }
  CHECK(identical);
  for (std::size_t i = 1; i < sa.events.size(); ++i) {
    CHECK(sa.events[i - 1].time <= sa.events[i].time);
  }
  for (const FaultEvent& ev : sa.events) {
    CHECK(ev.bit_index < space.size);
    CHECK(ev.time < 50);
    CHECK(ev.mode == FaultMode::MBU);
  }

  const BitAddressSpace empty{FaultDomain::Weight, 0, 0, {}};
  Rng c(1);
  CHECK_THROWS_AS(schedule_uniform(empty, 1, 10, FaultMode::SEU, c), invalid_value_error);
}

TEST_CASE("in-layer schedules stay inside the layer space") {
  const NetworkModel cnv = build_cnv(1, 1);
  Rng rng(7);
  const FaultSchedule s =
      schedule_in_layer(cnv, 1, FaultDomain::Weight, 200, 100, FaultMode::SEU, rng);
  CHECK(s.events.size() == 200);
  CHECK(s.scope_layer == 1);
  for (const FaultEvent& ev : s.events) CHECK(ev.bit_index < 1728);

  Rng rng2(8);
  CHECK(schedule_in_layer(cnv, 3, FaultDomain::Weight, 5, 10, FaultMode::MBU, rng2).events.size() ==
        5);
  CHECK_THROWS_AS(schedule_in_layer(cnv, 0, FaultDomain::Weight, 1, 10, FaultMode::SEU, rng2),
                  invalid_value_error);
  CHECK_THROWS_AS(schedule_in_layer(cnv, 9, FaultDomain::Activation, 1, 10, FaultMode::SEU, rng2),
                  invalid_value_error);
}

TEST_CASE("bit and time draws pass a chi-square uniformity test") {
  const std::size_t space_size = 1000;
  const std::size_t draws = 100000;
  LayerSpec fc;
  fc.kind = LayerKind::FullyConnected;
  fc.in_features = 100;
  fc.out_features = 10;
  fc.weight_bits = 1;
  const NetworkModel net = NetworkModel::build("u", 1, 1, {1, 100, 1, 1}, {fc});
  const BitAddressSpace space = build_address_space(net, FaultDomain::Weight);
  REQUIRE(space.size == space_size);

  Rng rng(20240101);
  const FaultSchedule s = schedule_uniform(space, draws, 200, FaultMode::SEU, rng);
  std::vector<std::size_t> bit_hits(space_size, 0);
  std::vector<std::size_t> time_hits(200, 0);
  for (const FaultEvent& ev : s.events) {
    ++bit_hits[ev.bit_index];
    ++time_hits[ev.time];
  }
  auto chi2 = [](const std::vector<std::size_t>& hits, double expected) {
    double stat = 0.0;
    for (std::size_t h : hits) {
      const double d = static_cast<double>(h) - expected;
      stat += d * d / expected;
    }
    return stat;
  };
  const double bit_stat = chi2(bit_hits, static_cast<double>(draws) / space_size);
  const double time_stat = chi2(time_hits, static_cast<double>(draws) / 200.0);
  boost::math::chi_squared bit_dist(static_cast<double>(space_size - 1));
  boost::math::chi_squared time_dist(199.0);
  CHECK(bit_stat < boost::math::quantile(bit_dist, 0.99));
  CHECK(time_stat < boost::math::quantile(time_dist, 0.99));
}

TEST_CASE("apply_due_events applies each event once, in time order") {
  NetworkModel net = build_toy();
  const NetworkModel base = net;
  const BitAddressSpace space = build_address_space(net, FaultDomain::Weight);
  FaultSchedule s;
  s.domain = FaultDomain::Weight;
  s.events = {{FaultMode::SEU, 5, 0}, {FaultMode::SEU, 6, 2}};

  ScheduleRunner runner(s, space);
  CHECK(runner.apply_due_events(net, 1) == 1);
  CHECK(runner.apply_due_events(net, 1) == 0);  // once only
  CHECK(net.param(0).storage_bit(5) != base.param(0).storage_bit(5));
  CHECK(net.param(0).storage_bit(6) == base.param(0).storage_bit(6));
  CHECK(runner.apply_due_events(net, 2) == 1);
  CHECK(runner.applied() == 2);
}

TEST_CASE("schedule CSV dump format") {
  FaultSchedule s;
  s.domain = FaultDomain::Weight;
  s.scope_layer = 3;
  s.events = {{FaultMode::MBU, 17, 4}};
  std::ostringstream os;
  dump_schedule_csv(s, os);
  CHECK(os.str() ==
        "event_index,mode,domain,scope,bit_index,time\n"
        "0,MBU,weight,layer3,17,4\n");
}
