#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qfi/rng.hpp"
#include "qfi/topology.hpp"

namespace qfi {

enum class FaultMode { SEU, MBU };

const char* fault_mode_name(FaultMode m);
FaultMode fault_mode_from_name(const std::string& name);

// An MBU is a burst of 8 consecutive bits, truncated at the space boundary.
inline constexpr std::size_t kMbuBurstBits = 8;

// Flat bit addresses over one fault domain of a network. Weight spaces
// address packed weight bits; activation spaces address the persistent
// activation XOR masks. Segments follow numbered-layer order (conv1..convN,
// fc1..fcM); scope_layer restricts the space to one numbered layer (0 = whole
// network).
struct BitAddressSpace {
  FaultDomain domain = FaultDomain::Weight;
  std::size_t scope_layer = 0;
  std::size_t size = 0;

  struct Segment {
    std::size_t start;         // global bit offset
    std::size_t length;        // bits
    std::size_t tensor_index;  // param index (weight) or QA index (activation)
  };
  std::vector<Segment> segments;

  // global bit -> (tensor_index, local bit)
  std::pair<std::size_t, std::size_t> locate(std::size_t bit) const;
};

BitAddressSpace build_address_space(const NetworkModel& net, FaultDomain domain,
                                    std::size_t scope_layer = 0);

struct FaultEvent {
  FaultMode mode = FaultMode::SEU;
  std::size_t bit_index = 0;
  std::size_t time = 0;  // image index within the evaluation batch
};

// Events sorted by time (stable on creation order); all events share the
// schedule's domain and scope.
struct FaultSchedule {
  FaultDomain domain = FaultDomain::Weight;
  std::size_t scope_layer = 0;
  std::vector<FaultEvent> events;
};

// XOR-flips exactly one storage bit of the addressed domain.
void flip_bit(NetworkModel& net, const BitAddressSpace& space, std::size_t bit);

// XOR-flips bits [start, min(start + 8, size)).
void inject_mbu(NetworkModel& net, const BitAddressSpace& space, std::size_t start);

// n_faults events with i.i.d. uniform bit indices and injection times.
FaultSchedule schedule_uniform(const BitAddressSpace& space, std::size_t n_faults,
                               std::size_t batch_size, FaultMode mode, Rng& rng);

// As schedule_uniform, restricted to one numbered layer's address space.
FaultSchedule schedule_in_layer(const NetworkModel& net, std::size_t layer, FaultDomain domain,
                                std::size_t n_faults, std::size_t batch_size, FaultMode mode,
                                Rng& rng);

// Replays a schedule over a batch timeline: each call applies every
// not-yet-applied event with time <= t, once. Corruption persists for the
// rest of the trial.
class ScheduleRunner {
 public:
  ScheduleRunner(const FaultSchedule& schedule, const BitAddressSpace& space)
      : schedule_(&schedule), space_(&space) {}

  // Returns the number of events applied by this call.
  std::size_t apply_due_events(NetworkModel& net, std::size_t t);

  std::size_t applied() const { return cursor_; }

 private:
  const FaultSchedule* schedule_;
  const BitAddressSpace* space_;
  std::size_t cursor_ = 0;
};

// Debug dump: event_index,mode,domain,scope,bit_index,time
void dump_schedule_csv(const FaultSchedule& schedule, std::ostream& os);

}  // namespace qfi
