#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "qfi/attack.hpp"
#include "qfi/campaign.hpp"
#include "qfi/dataset.hpp"
#include "qfi/heatmap.hpp"
#include "qfi/statmodel.hpp"
#include "qfi/topology.hpp"
#include "qfi/train.hpp"
#include "qfi/weights_io.hpp"

namespace {

using nlohmann::json;

// 0 success, 2 usage, 3 data/schema, 4 numerical
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void write_sidecar(const std::string& out_path, const std::string& command, const json& flags) {
  json meta;
  meta["command"] = command;
  meta["flags"] = flags;
  std::ofstream os(out_path + ".meta.json", std::ios::trunc);
  if (!os) throw qfi::io_error("cannot write sidecar for '" + out_path + "'");
  os << meta.dump(2) << '\n';
}

std::vector<std::size_t> parse_count_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw CLI::ValidationError("--faults", "empty entry in list");
    std::size_t v = 0;
    try {
      v = std::stoull(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--faults", "'" + item + "' is not a count");
    }
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--faults", "empty list");
  return out;
}

struct DataFlags {
  std::string dataset_path;
  bool synthetic = false;
  std::size_t images = 1000;
  int classes = 10;
};

qfi::Dataset load_data(const DataFlags& f, const qfi::Dims& image_dims, std::uint64_t seed) {
  if (f.synthetic) {
    qfi::Rng rng(qfi::mix_seed(seed, 0x73796e7468ULL));
    return qfi::synth_dataset(f.images, f.classes, rng, image_dims);
  }
  if (f.dataset_path.empty()) {
    throw CLI::ValidationError("--dataset", "either --dataset PATH or --synthetic is required");
  }
  return qfi::load_cifar10(f.dataset_path, f.images);
}

struct TrainArgs {
  std::string arch;
  DataFlags data;
  int epochs = 30;
  double lr = 0.05;
  int batch = 32;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  qfi::NetworkModel net = qfi::build_network(qfi::descriptor_by_name(a.arch));
  const qfi::Dataset ds = load_data(a.data, net.input_dims, a.seed);
  qfi::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.batch_size = a.batch;
  qfi::Rng rng(qfi::mix_seed(a.seed, 0x747261696eULL));
  const qfi::TrainResult result = qfi::train(net, ds.samples, cfg, rng);
  qfi::save_weights(net, a.out);

  json flags{{"arch", a.arch},   {"synthetic", a.data.synthetic},
             {"dataset", a.data.dataset_path}, {"images", a.data.images},
             {"classes", a.data.classes},      {"epochs", a.epochs},
             {"lr", a.lr},       {"batch", a.batch},
             {"seed", a.seed},   {"out", a.out}};
  write_sidecar(a.out, "train", flags);

  if (!result.epoch_accuracy.empty()) {
    std::cout << "final train accuracy: " << qfi::format_double(result.epoch_accuracy.back())
              << "%\n";
    std::cout << "final train loss: " << qfi::format_double(result.epoch_loss.back()) << '\n';
  }
  std::cout << "weights written to " << a.out << '\n';
  return 0;
}

struct InfoArgs {
  std::string arch;
  std::string weights;
  std::string out;
};

int cmd_info(const InfoArgs& a) {
  qfi::NetworkModel net =
      a.weights.empty() ? qfi::build_network(qfi::descriptor_by_name(a.arch))
                        : qfi::load_weights(a.weights);
  std::ostringstream os;
  os << "architecture: " << net.name << " (W" << net.weight_bits << "A" << net.activation_bits
     << ")\n";
  os << "input: " << net.input_dims[1] << 'x' << net.input_dims[2] << 'x' << net.input_dims[3]
     << '\n';
  os << "layers:\n";
  std::size_t numbered = 0;
  for (const qfi::LayerSpec& spec : net.layers) {
    os << "  ";
    switch (spec.kind) {
      case qfi::LayerKind::Conv2d:
        ++numbered;
        os << "L" << numbered << " Conv2d " << spec.in_channels << "->" << spec.out_channels
           << " k" << spec.kernel;
        break;
      case qfi::LayerKind::FullyConnected:
        ++numbered;
        os << "L" << numbered << " FullyConnected " << spec.in_features << "->"
           << spec.out_features;
        break;
      case qfi::LayerKind::MaxPool2d:
        os << "   MaxPool2d " << spec.pool << 'x' << spec.pool;
        break;
      case qfi::LayerKind::QuantActivation:
        os << "   QuantActivation " << spec.out_dims[1] << 'x' << spec.out_dims[2] << 'x'
           << spec.out_dims[3];
        break;
    }
    os << '\n';
  }
  os << "susceptible weight bits: "
     << qfi::count_susceptible_bits(net, qfi::FaultDomain::Weight) << '\n';
  os << "susceptible activation bits: "
     << qfi::count_susceptible_bits(net, qfi::FaultDomain::Activation) << '\n';
  std::cout << os.str();
  if (!a.out.empty()) {
    std::ofstream file(a.out, std::ios::trunc);
    file << os.str();
    json flags{{"arch", a.arch}, {"weights", a.weights}, {"out", a.out}};
    write_sidecar(a.out, "info", flags);
  }
  return 0;
}

struct CampaignArgs {
  std::string weights;
  DataFlags data;
  std::vector<std::string> modes{"seu"};
  std::string domain = "weight";
  std::vector<std::size_t> layers;
  std::string faults = "1";
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
};

int cmd_campaign(const CampaignArgs& a) {
  const qfi::NetworkModel net = qfi::load_weights(a.weights);
  DataFlags data = a.data;
  const qfi::Dataset ds = load_data(data, net.input_dims, a.seed);
  if (ds.samples.size() != data.images) {
    throw qfi::io_error("dataset provides " + std::to_string(ds.samples.size()) +
                        " images, campaign needs " + std::to_string(data.images));
  }
  const std::vector<std::size_t> counts = parse_count_list(a.faults);

  std::vector<qfi::GridEntry> entries;
  for (const std::string& mode_name : a.modes) {
    const qfi::FaultMode mode = qfi::fault_mode_from_name(mode_name);
    const qfi::FaultDomain domain = qfi::fault_domain_from_name(a.domain);
    auto push = [&](std::size_t layer, std::size_t n) {
      qfi::ScenarioConfig cfg;
      cfg.mode = mode;
      cfg.domain = domain;
      cfg.layer = layer;
      cfg.n_faults = n;
      cfg.trials = a.trials;
      cfg.batch_size = data.images;
      cfg.base_seed = a.seed;
      entries.push_back({&net, &ds.samples, cfg});
    };
    if (a.layers.empty()) {
      for (std::size_t n : counts) push(0, n);
    } else {
      for (std::size_t layer : a.layers) {
        for (std::size_t n : counts) push(layer, n);
      }
    }
  }

  const qfi::ResultsTable table = qfi::run_grid(entries, a.threads);
  qfi::save_results(table, a.out);

  json flags{{"weights", a.weights}, {"synthetic", data.synthetic},
             {"dataset", data.dataset_path}, {"images", data.images},
             {"classes", data.classes}, {"modes", a.modes},
             {"domain", a.domain}, {"layers", a.layers},
             {"faults", a.faults}, {"trials", a.trials},
             {"seed", a.seed}, {"threads", a.threads},
             {"out", a.out}};
  write_sidecar(a.out, "campaign", flags);

  for (const qfi::ScenarioSummary& s : qfi::summarize(table)) {
    std::cout << s.scenario_id << ": baseline=" << qfi::format_double(s.baseline_acc)
              << " mean=" << qfi::format_double(s.mean_acc)
              << " std=" << qfi::format_double(s.std_acc)
              << " min=" << qfi::format_double(s.min_acc)
              << " worst_drop=" << qfi::format_double(s.worst_drop) << '\n';
  }
  std::cout << table.rows.size() << " rows written to " << a.out << '\n';
  return 0;
}

struct FitArgs {
  std::string results;
  std::string out;
};

int cmd_fit(const FitArgs& a) {
  const qfi::ResultsTable table = qfi::load_results(a.results);
  if (table.rows.empty()) throw qfi::io_error("results file has no rows");
  const bool in_layer = table.rows.front().layer != 0;
  qfi::ModelSpec spec;
  spec.kind = in_layer ? qfi::ModelKind::InLayer : qfi::ModelKind::AcrossNetwork;
  const qfi::DesignMatrix d = qfi::build_design_matrix(table, spec);
  std::vector<std::string> names(qfi::ModelSpec::term_names().begin(),
                                 qfi::ModelSpec::term_names().end());
  const qfi::OlsFit fit = qfi::ols_fit(d, names);
  qfi::save_coefficients(fit, spec, a.out);
  json flags{{"results", a.results}, {"out", a.out}};
  write_sidecar(a.out, "fit", flags);
  std::cout << qfi::coefficient_report(fit, spec);
  return 0;
}

struct PredictArgs {
  std::string coefficients;
  double wbits = 0.0;
  std::string mode = "seu";
  std::string domain = "weight";
  std::optional<std::size_t> layer;
  std::string faults = "0";
  std::string out;
};

int cmd_predict(const PredictArgs& a) {
  const qfi::CoefficientFile file = qfi::load_coefficients(a.coefficients);
  const std::vector<std::size_t> counts = parse_count_list(a.faults);
  if (counts.size() != 1) throw CLI::ValidationError("--faults", "predict takes one count");
  const double x1 = a.wbits;
  const double x2 = qfi::fault_mode_from_name(a.mode) == qfi::FaultMode::MBU ? 1.0 : 0.0;
  double x3 = 0.0;
  if (file.spec.kind == qfi::ModelKind::InLayer) {
    if (!a.layer) throw CLI::ValidationError("--layer", "in-layer model needs --layer");
    if (*a.layer < 1 || *a.layer > 9) throw CLI::ValidationError("--layer", "must be 1..9");
    x3 = static_cast<double>(*a.layer);
  } else {
    if (a.layer) throw CLI::ValidationError("--layer", "across-network model takes --domain");
    x3 = qfi::fault_domain_from_name(a.domain) == qfi::FaultDomain::Activation ? 1.0 : 0.0;
  }
  const double x4 = static_cast<double>(counts[0]);
  const double y = qfi::predict(file.beta, file.spec, x1, x2, x3, x4);
  std::cout << "expected accuracy: " << qfi::format_double(y) << '\n';
  if (!a.out.empty()) {
    std::ofstream os(a.out, std::ios::trunc);
    os << qfi::format_double(y) << '\n';
    json flags{{"coefficients", a.coefficients}, {"wbits", a.wbits}, {"mode", a.mode},
               {"domain", a.domain},             {"faults", a.faults}, {"out", a.out}};
    if (a.layer) flags["layer"] = *a.layer;
    write_sidecar(a.out, "predict", flags);
  }
  return 0;
}

struct HeatmapArgs {
  std::string results;
  double threshold = 1.0;
  std::string out;
  std::string svg;
};

int cmd_heatmap(const HeatmapArgs& a) {
  const qfi::ResultsTable table = qfi::load_results(a.results);
  const qfi::HeatmapGrid grid = qfi::layer_drop_probability(table, a.threshold);
  qfi::save_heatmap_csv(grid, a.out);
  if (!a.svg.empty()) qfi::save_heatmap_svg(grid, a.svg);
  json flags{{"results", a.results}, {"threshold", a.threshold}, {"out", a.out}, {"svg", a.svg}};
  write_sidecar(a.out, "heatmap", flags);

  const qfi::LayerEntropyScores scores = qfi::layer_entropy_score(grid);
  std::cout << "layer entropy scores (mean binary entropy of drop probability):\n";
  for (std::size_t i = 0; i < scores.layers.size(); ++i) {
    std::cout << "  L" << scores.layers[i] << ": h=" << qfi::format_double(scores.entropy_score[i])
              << " mean_p=" << qfi::format_double(scores.mean_drop_prob[i]) << '\n';
  }
  std::cout << "most vulnerable first:";
  for (std::size_t l : scores.ranking) std::cout << " L" << l;
  std::cout << '\n';
  std::cout << "heatmap written to " << a.out << '\n';
  return 0;
}

struct AttackArgs {
  std::string weights;
  DataFlags data;
  std::size_t budget = 1;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_attack(const AttackArgs& a) {
  const qfi::NetworkModel net = qfi::load_weights(a.weights);
  const qfi::Dataset ds = load_data(a.data, net.input_dims, a.seed);
  const qfi::AttackResult result =
      qfi::bit_search_attack(net, ds.samples, qfi::AttackBudget{a.budget}, a.seed);

  std::ofstream os(a.out, std::ios::trunc);
  if (!os) throw qfi::io_error("cannot open '" + a.out + "' for writing");
  os << "step,bit_index,mean_loss\n";
  os << "0,," << qfi::format_double(result.loss_trace[0]) << '\n';
  for (std::size_t i = 0; i < result.flipped_bits.size(); ++i) {
    os << i + 1 << ',' << result.flipped_bits[i] << ','
       << qfi::format_double(result.loss_trace[i + 1]) << '\n';
  }
  json flags{{"weights", a.weights}, {"synthetic", a.data.synthetic},
             {"dataset", a.data.dataset_path}, {"images", a.data.images},
             {"classes", a.data.classes}, {"budget", a.budget},
             {"seed", a.seed}, {"out", a.out}};
  write_sidecar(a.out, "attack", flags);

  std::cout << result.flipped_bits.size() << " bits flipped; final mean loss "
            << qfi::format_double(result.loss_trace.back()) << '\n';
  return 0;
}

void add_data_flags(CLI::App* cmd, DataFlags& f, std::size_t default_images) {
  f.images = default_images;
  cmd->add_option("--dataset", f.dataset_path, "CIFAR-10 binary batch file");
  cmd->add_flag("--synthetic", f.synthetic, "use the synthetic blob dataset");
  cmd->add_option("--images", f.images, "number of images to use")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--classes", f.classes, "synthetic class count")->check(CLI::Range(2, 10));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bit-level fault injection simulator for quantized CNN inference"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a quantized network");
  train_cmd->add_option("--arch", train_args.arch, "cnvW1A1 | cnvW2A2 | toy")->required();
  add_data_flags(train_cmd, train_args.data, 500);
  train_cmd->add_option("--epochs", train_args.epochs)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr", train_args.lr)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--batch", train_args.batch)->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_args.seed);
  train_cmd->add_option("--out", train_args.out, "QNFW weight file")->required();

  InfoArgs info_args;
  auto* info_cmd = app.add_subcommand("info", "topology and susceptible-bit report");
  info_cmd->add_option("--arch", info_args.arch);
  info_cmd->add_option("--weights", info_args.weights);
  info_cmd->add_option("--out", info_args.out);

  CampaignArgs campaign_args;
  auto* campaign_cmd = app.add_subcommand("campaign", "run seeded fault-injection scenarios");
  campaign_cmd->add_option("--weights", campaign_args.weights)->required();
  add_data_flags(campaign_cmd, campaign_args.data, 1000);
  campaign_cmd->add_option("--mode", campaign_args.modes, "seu | mbu (repeatable)")
      ->delimiter(',');
  campaign_cmd->add_option("--domain", campaign_args.domain, "weight | activation");
  campaign_cmd->add_option("--layer", campaign_args.layers, "in-layer scope (repeatable)")
      ->delimiter(',');
  campaign_cmd->add_option("--faults", campaign_args.faults, "fault counts, e.g. 1,2,5")
      ->required();
  campaign_cmd->add_option("--trials", campaign_args.trials)->check(CLI::PositiveNumber);
  campaign_cmd->add_option("--seed", campaign_args.seed);
  campaign_cmd->add_option("--threads", campaign_args.threads);
  campaign_cmd->add_option("--out", campaign_args.out, "results CSV")->required();

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "fit the 16-term factorial model");
  fit_cmd->add_option("--results", fit_args.results, "campaign results CSV")->required();
  fit_cmd->add_option("--out", fit_args.out, "coefficient CSV")->required();

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "expected accuracy from a coefficient file");
  predict_cmd->add_option("--coefficients", predict_args.coefficients)->required();
  predict_cmd->add_option("--wbits", predict_args.wbits, "X1 quantization level");
  predict_cmd->add_option("--mode", predict_args.mode, "seu | mbu");
  predict_cmd->add_option("--domain", predict_args.domain, "weight | activation");
  predict_cmd->add_option("--layer", predict_args.layer, "layer 1..9 (in-layer models)");
  predict_cmd->add_option("--faults", predict_args.faults, "fault count");
  predict_cmd->add_option("--out", predict_args.out);

  HeatmapArgs heatmap_args;
  auto* heatmap_cmd = app.add_subcommand("heatmap", "layer drop-probability heat map");
  heatmap_cmd->add_option("--results", heatmap_args.results, "in-layer results CSV")->required();
  heatmap_cmd->add_option("--threshold", heatmap_args.threshold, "drop threshold tau")
      ->check(CLI::NonNegativeNumber);
  heatmap_cmd->add_option("--out", heatmap_args.out, "heatmap CSV")->required();
  heatmap_cmd->add_option("--svg", heatmap_args.svg, "also render SVG");

  AttackArgs attack_args;
  auto* attack_cmd = app.add_subcommand("attack", "greedy vulnerable-bit search");
  attack_cmd->add_option("--weights", attack_args.weights)->required();
  add_data_flags(attack_cmd, attack_args.data, 64);
  attack_cmd->add_option("--budget", attack_args.budget, "maximum bit flips")
      ->check(CLI::PositiveNumber);
  attack_cmd->add_option("--seed", attack_args.seed);
  attack_cmd->add_option("--out", attack_args.out, "flip list + loss trace CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (info_cmd->parsed()) return cmd_info(info_args);
    if (campaign_cmd->parsed()) return cmd_campaign(campaign_args);
    if (fit_cmd->parsed()) return cmd_fit(fit_args);
    if (predict_cmd->parsed()) return cmd_predict(predict_args);
    if (heatmap_cmd->parsed()) return cmd_heatmap(heatmap_args);
    if (attack_cmd->parsed()) return cmd_attack(attack_args);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const qfi::numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const qfi::io_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
