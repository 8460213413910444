#include "qfi/fault.hpp"

#include <algorithm>
#include <ostream>

namespace qfi {

const char* fault_mode_name(FaultMode m) { return m == FaultMode::SEU ? "SEU" : "MBU"; }

FaultMode fault_mode_from_name(const std::string& name) {
  if (name == "SEU" || name == "seu") return FaultMode::SEU;
  if (name == "MBU" || name == "mbu") return FaultMode::MBU;
  throw invalid_value_error("unknown fault mode '" + name + "'");
}

std::pair<std::size_t, std::size_t> BitAddressSpace::locate(std::size_t bit) const {
  if (bit >= size) throw invalid_value_error("bit index " + std::to_string(bit) + " out of range");
  // Few segments; linear scan.
  for (const Segment& seg : segments) {
    if (bit < seg.start + seg.length) return {seg.tensor_index, bit - seg.start};
  }
  throw invalid_value_error("bit index not covered by any segment");
}

BitAddressSpace build_address_space(const NetworkModel& net, FaultDomain domain,
                                    std::size_t scope_layer) {
  BitAddressSpace space;
  space.domain = domain;
  space.scope_layer = scope_layer;
  const std::size_t numbered = net.numbered_layer_count();
  if (scope_layer > numbered) {
    throw invalid_value_error("layer " + std::to_string(scope_layer) + " out of range (1.." +
                              std::to_string(numbered) + ")");
  }
  auto add_segment = [&space](std::size_t tensor_index, std::size_t bits) {
    if (bits == 0) return;
    space.segments.push_back({space.size, bits, tensor_index});
    space.size += bits;
  };
  const std::size_t first = scope_layer == 0 ? 1 : scope_layer;
  const std::size_t last = scope_layer == 0 ? numbered : scope_layer;
  for (std::size_t k = first; k <= last; ++k) {
    if (domain == FaultDomain::Weight) {
      add_segment(k - 1, net.param(k - 1).bit_count());
    } else {
      const std::size_t qa = net.qa_for_numbered_layer(k);
      if (qa == NetworkModel::npos) {
        if (scope_layer != 0) {
          throw invalid_value_error("layer " + std::to_string(k) +
                                    " has no quantized activation buffer");
        }
        continue;
      }
      add_segment(qa, net.mask(qa).bits);
    }
  }
  return space;
}

namespace {

void flip_one(NetworkModel& net, const BitAddressSpace& space, std::size_t bit) {
  const auto [tensor, local] = space.locate(bit);
  if (space.domain == FaultDomain::Weight) {
    net.flip_weight_bit(tensor, local);
  } else {
    net.flip_mask_bit(tensor, local);
  }
}

}  // namespace

void flip_bit(NetworkModel& net, const BitAddressSpace& space, std::size_t bit) {
  flip_one(net, space, bit);
}

void inject_mbu(NetworkModel& net, const BitAddressSpace& space, std::size_t start) {
  if (start >= space.size) {
    throw invalid_value_error("burst start " + std::to_string(start) + " out of range");
  }
  const std::size_t end = std::min(start + kMbuBurstBits, space.size);
  for (std::size_t b = start; b < end; ++b) flip_one(net, space, b);
}

FaultSchedule schedule_uniform(const BitAddressSpace& space, std::size_t n_faults,
                               std::size_t batch_size, FaultMode mode, Rng& rng) {
  if (batch_size == 0) throw invalid_value_error("batch size must be positive");
  if (space.size == 0 && n_faults > 0) {
    throw invalid_value_error("cannot schedule faults over an empty address space");
  }
  FaultSchedule schedule;
  schedule.domain = space.domain;
  schedule.scope_layer = space.scope_layer;
  schedule.events.reserve(n_faults);
  for (std::size_t i = 0; i < n_faults; ++i) {
    FaultEvent ev;
    ev.mode = mode;
    ev.bit_index = rng.below(space.size);
    ev.time = rng.below(batch_size);
    schedule.events.push_back(ev);
  }
  std::stable_sort(schedule.events.begin(), schedule.events.end(),
                   [](const FaultEvent& a, const FaultEvent& b) { return a.time < b.time; });
  return schedule;
}

FaultSchedule schedule_in_layer(const NetworkModel& net, std::size_t layer, FaultDomain domain,
                                std::size_t n_faults, std::size_t batch_size, FaultMode mode,
                                Rng& rng) {
  if (layer < 1 || layer > net.numbered_layer_count()) {
    throw invalid_value_error("layer " + std::to_string(layer) + " out of range");
  }
  const BitAddressSpace space = build_address_space(net, domain, layer);
  return schedule_uniform(space, n_faults, batch_size, mode, rng);
}

std::size_t ScheduleRunner::apply_due_events(NetworkModel& net, std::size_t t) {
  std::size_t applied = 0;
  const auto& events = schedule_->events;
  while (cursor_ < events.size() && events[cursor_].time <= t) {
    const FaultEvent& ev = events[cursor_];
    if (ev.mode == FaultMode::SEU) {
      flip_bit(net, *space_, ev.bit_index);
    } else {
      inject_mbu(net, *space_, ev.bit_index);
    }
    ++cursor_;
    ++applied;
  }
  return applied;
}

void dump_schedule_csv(const FaultSchedule& schedule, std::ostream& os) {
  os << "event_index,mode,domain,scope,bit_index,time\n";
  const std::string scope =
      schedule.scope_layer == 0 ? "network" : "layer" + std::to_string(schedule.scope_layer);
  for (std::size_t i = 0; i < schedule.events.size(); ++i) {
    const FaultEvent& ev = schedule.events[i];
    os << i << ',' << fault_mode_name(ev.mode) << ',' << fault_domain_name(schedule.domain) << ','
       << scope << ',' << ev.bit_index << ',' << ev.time << '\n';
  }
}

}  // namespace qfi
