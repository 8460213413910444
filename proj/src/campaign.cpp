#include "qfi/campaign.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace qfi {

std::string ScenarioConfig::scenario_id(const std::string& arch) const {
  std::string id = arch;
  id += '_';
  id += mode == FaultMode::SEU ? "seu" : "mbu";
  id += '_';
  id += fault_domain_name(domain);
  if (layer != 0) id += "_L" + std::to_string(layer);
  id += "_n" + std::to_string(n_faults);
  return id;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw io_error("malformed number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw io_error("malformed integer '" + s + "'");
  }
  return v;
}

// Runs fn(0..n-1) on up to `threads` workers. Work items are independent and
// write to disjoint slots, so scheduling order cannot affect results.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

TrialRecord run_trial(const NetworkModel& base_net, const std::vector<TrainingSample>& batch,
                      const ScenarioConfig& config, std::size_t trial_index, double baseline_acc,
                      const BitAddressSpace& space) {
  if (batch.size() != config.batch_size) {
    throw invalid_value_error("dataset size does not match configured batch size");
  }
  const std::string id = config.scenario_id(base_net.name);
  const std::uint64_t seed =
      mix_seed(config.base_seed, fnv1a64(id.data(), id.size()), trial_index);
  Rng rng(seed);
  const FaultSchedule schedule =
      schedule_uniform(space, config.n_faults, config.batch_size, config.mode, rng);

  NetworkModel net = base_net;
  ScheduleRunner runner(schedule, space);
  std::size_t correct = 0;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    runner.apply_due_events(net, t);
    if (predicted_class(infer(net, batch[t].image)) == batch[t].label) ++correct;
  }
  TrialRecord rec;
  rec.scenario_id = id;
  rec.trial = trial_index;
  rec.seed = seed;
  rec.wbits = base_net.weight_bits;
  rec.abits = base_net.activation_bits;
  rec.mode = config.mode;
  rec.domain = config.domain;
  rec.layer = config.layer;
  rec.n_faults = config.n_faults;
  rec.baseline_acc = baseline_acc;
  rec.faulty_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(batch.size());
  rec.drop = rec.baseline_acc - rec.faulty_acc;
  return rec;
}

ResultsTable run_scenario(const NetworkModel& base_net, const std::vector<TrainingSample>& batch,
                          const ScenarioConfig& config, int threads) {
  if (config.trials < 1) throw invalid_value_error("scenario needs at least one trial");
  if (!base_net.masks_all_zero()) throw invalid_value_error("base network is not fault-free");
  const BitAddressSpace space = build_address_space(base_net, config.domain, config.layer);
  const double baseline = accuracy(base_net, batch);

  ResultsTable table;
  table.rows.resize(config.trials);
  parallel_for(config.trials, threads, [&](std::size_t i) {
    table.rows[i] = run_trial(base_net, batch, config, i, baseline, space);
  });
  return table;
}

ResultsTable run_grid(const std::vector<GridEntry>& entries, int threads) {
  if (entries.empty()) throw invalid_value_error("empty scenario grid");
  std::map<std::string, int> seen;
  for (const GridEntry& e : entries) {
    const std::string id = e.config.scenario_id(e.net->name);
    if (++seen[id] > 1) throw invalid_value_error("duplicate scenario id '" + id + "'");
  }
  ResultsTable all;
  for (const GridEntry& e : entries) {
    ResultsTable part = run_scenario(*e.net, *e.batch, e.config, threads);
    all.rows.insert(all.rows.end(), std::make_move_iterator(part.rows.begin()),
                    std::make_move_iterator(part.rows.end()));
  }
  return all;
}

std::vector<ScenarioSummary> summarize(const ResultsTable& table) {
  std::vector<ScenarioSummary> out;
  std::map<std::string, std::size_t> index;
  for (const TrialRecord& r : table.rows) {
    auto it = index.find(r.scenario_id);
    if (it == index.end()) {
      it = index.emplace(r.scenario_id, out.size()).first;
      ScenarioSummary s;
      s.scenario_id = r.scenario_id;
      s.baseline_acc = r.baseline_acc;
      s.min_acc = r.faulty_acc;
      s.worst_drop = r.drop;
      out.push_back(s);
    }
    ScenarioSummary& s = out[it->second];
    s.trials += 1;
    s.mean_acc += r.faulty_acc;
    s.std_acc += r.faulty_acc * r.faulty_acc;
    s.mean_drop += r.drop;
    s.min_acc = std::min(s.min_acc, r.faulty_acc);
    s.worst_drop = std::max(s.worst_drop, r.drop);
  }
  for (ScenarioSummary& s : out) {
    const double n = static_cast<double>(s.trials);
    s.mean_acc /= n;
    s.mean_drop /= n;
    const double var = s.std_acc / n - s.mean_acc * s.mean_acc;
    s.std_acc = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return out;
}

void save_results(const ResultsTable& table, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os << "scenario_id,trial,seed,wbits,abits,fault_mode,domain,layer,n_faults,"
        "baseline_acc,faulty_acc,drop\n";
  for (const TrialRecord& r : table.rows) {
    os << r.scenario_id << ',' << r.trial << ',' << r.seed << ',' << r.wbits << ',' << r.abits
       << ',' << fault_mode_name(r.mode) << ',' << fault_domain_name(r.domain) << ',' << r.layer
       << ',' << r.n_faults << ',' << format_double(r.baseline_acc) << ','
       << format_double(r.faulty_acc) << ',' << format_double(r.drop) << '\n';
  }
  if (!os) throw io_error("write failed for '" + path + "'");
}

ResultsTable load_results(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw io_error("empty results file");
  if (line ==
      "scenario_id,trial,seed,wbits,abits,fault_mode,domain,layer,n_faults,baseline_acc,"
      "faulty_acc,drop") {
    // expected schema
  } else {
    throw io_error("unexpected results header: " + line);
  }
  ResultsTable table;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) {
      throw io_error("line " + std::to_string(lineno) + ": expected 12 fields, got " +
                     std::to_string(fields.size()));
    }
    TrialRecord r;
    r.scenario_id = fields[0];
    r.trial = parse_u64(fields[1]);
    r.seed = parse_u64(fields[2]);
    r.wbits = static_cast<int>(parse_u64(fields[3]));
    r.abits = static_cast<int>(parse_u64(fields[4]));
    r.mode = fault_mode_from_name(fields[5]);
    r.domain = fault_domain_from_name(fields[6]);
    r.layer = parse_u64(fields[7]);
    r.n_faults = parse_u64(fields[8]);
    r.baseline_acc = parse_double(fields[9]);
    r.faulty_acc = parse_double(fields[10]);
    r.drop = parse_double(fields[11]);
    if (r.baseline_acc < 0.0 || r.baseline_acc > 100.0 || r.faulty_acc < 0.0 ||
        r.faulty_acc > 100.0) {
      throw io_error("line " + std::to_string(lineno) + ": accuracy out of [0,100]");
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

}  // namespace qfi
