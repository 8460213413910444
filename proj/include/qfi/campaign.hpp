#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qfi/fault.hpp"
#include "qfi/network.hpp"

namespace qfi {

// One fault-injection scenario: a factor combination plus trial/batch sizing.
struct ScenarioConfig {
  FaultMode mode = FaultMode::SEU;
  FaultDomain domain = FaultDomain::Weight;
  std::size_t layer = 0;  // 0 = whole-network scope, 1..9 = in-layer
  std::size_t n_faults = 0;
  std::size_t trials = 2000;
  std::size_t batch_size = 1000;
  std::uint64_t base_seed = 0;

  // e.g. cnvW1A1_seu_weight_n10, cnvW1A1_mbu_weight_L3_n50
  std::string scenario_id(const std::string& arch) const;
};

struct TrialRecord {
  std::string scenario_id;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  int wbits = 1;
  int abits = 1;
  FaultMode mode = FaultMode::SEU;
  FaultDomain domain = FaultDomain::Weight;
  std::size_t layer = 0;
  std::size_t n_faults = 0;
  double baseline_acc = 0.0;
  double faulty_acc = 0.0;
  double drop = 0.0;
};

struct ResultsTable {
  std::vector<TrialRecord> rows;
};

struct ScenarioSummary {
  std::string scenario_id;
  std::size_t trials = 0;
  double baseline_acc = 0.0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  double min_acc = 0.0;
  double mean_drop = 0.0;
  double worst_drop = 0.0;
};

// One seeded trial: clones the network, schedules n_faults events, classifies
// the batch image by image applying due events before each image, and scores
// accuracy over the whole batch. Deterministic per (config, trial_index).
TrialRecord run_trial(const NetworkModel& base_net, const std::vector<TrainingSample>& batch,
                      const ScenarioConfig& config, std::size_t trial_index, double baseline_acc,
                      const BitAddressSpace& space);

// All trials of one scenario. Rows are in trial order regardless of the
// worker count. threads <= 0 selects the hardware concurrency.
ResultsTable run_scenario(const NetworkModel& base_net, const std::vector<TrainingSample>& batch,
                          const ScenarioConfig& config, int threads = 1);

// One scenario per entry, concatenated in entry order; scenario ids must be
// unique across the grid.
struct GridEntry {
  const NetworkModel* net = nullptr;
  const std::vector<TrainingSample>* batch = nullptr;
  ScenarioConfig config;
};
ResultsTable run_grid(const std::vector<GridEntry>& entries, int threads = 1);

// Per-scenario aggregates in first-appearance order, accumulated in trial
// order so the numbers are independent of execution parallelism.
std::vector<ScenarioSummary> summarize(const ResultsTable& table);

// CSV schema:
// scenario_id,trial,seed,wbits,abits,fault_mode,domain,layer,n_faults,baseline_acc,faulty_acc,drop
void save_results(const ResultsTable& table, const std::string& path);
ResultsTable load_results(const std::string& path);

// Shortest round-trip decimal form; all CSV output uses this.
std::string format_double(double v);

}  // namespace qfi
