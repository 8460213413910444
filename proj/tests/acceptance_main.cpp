// Acceptance suite: one pass/fail line per criterion. Usage:
//   acceptance <qfi binary> [criterion numbers...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "qfi/attack.hpp"
#include "qfi/campaign.hpp"
#include "qfi/dataset.hpp"
#include "qfi/heatmap.hpp"
#include "qfi/quantize.hpp"
#include "qfi/statmodel.hpp"
#include "qfi/topology.hpp"
#include "qfi/train.hpp"
#include "qfi/weights_io.hpp"

namespace fs = std::filesystem;
using namespace qfi;

namespace {

std::string g_cli;
fs::path g_dir;

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back(what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

// ---- shared fixtures -------------------------------------------------------

const Dataset& toy_train_set() {
  static Dataset ds = [] {
    Rng rng(314159);
    return synth_dataset(200, 10, rng);
  }();
  return ds;
}

const Dataset& toy_eval_set() {
  static Dataset ds = [] {
    Rng rng(271828);
    return synth_dataset(200, 10, rng);
  }();
  return ds;
}

const NetworkModel& trained_toy() {
  static NetworkModel net = [] {
    NetworkModel toy = build_toy();
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.lr = 0.02;
    cfg.batch_size = 20;
    Rng rng(161803);
    train(toy, toy_train_set().samples, cfg, rng);
    return toy;
  }();
  return net;
}

const Dataset& cnv_eval_set() {
  static Dataset ds = [] {
    Rng rng(115000);
    return synth_dataset(32, 10, rng, {1, 3, 32, 32});
  }();
  return ds;
}

const NetworkModel& trained_cnv(int bits) {
  static std::map<int, NetworkModel> cache;
  auto it = cache.find(bits);
  if (it == cache.end()) {
    NetworkModel net = build_cnv(bits, bits);
    Rng data_rng(420000 + bits);
    const Dataset train_set = synth_dataset(96, 10, data_rng, {1, 3, 32, 32});
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.lr = 0.02;
    cfg.batch_size = 16;
    Rng rng(530000 + bits);
    train(net, train_set.samples, cfg, rng);
    it = cache.emplace(bits, std::move(net)).first;
  }
  return it->second;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>" + (g_dir / "err.txt").string();
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

// ---- criteria --------------------------------------------------------------

void criterion1_quantizer(Check& c) {
  c.require(quantize_deterministic(0.3) == 1, "0.3 -> +1");
  c.require(quantize_deterministic(0.0) == 1, "0.0 -> +1");
  c.require(quantize_deterministic(-0.0001) == -1, "-0.0001 -> -1");
  c.require(hard_sigmoid(0.0) == 0.5, "sigma(0) = 0.5");
  c.require(hard_sigmoid(-3.0) == 0.0, "sigma(-3) = 0");
  c.require(hard_sigmoid(1.0) == 1.0, "sigma(1) = 1");

  Rng rng(20240202);
  const double grid[] = {-1.5, -0.5, 0.0, 0.5, 1.5};
  for (double w : grid) {
    const int draws = 10000;
    int plus = 0;
    for (int i = 0; i < draws; ++i) {
      if (quantize_stochastic(w, rng) == 1) ++plus;
    }
    const double p = hard_sigmoid(w);
    const double sigma = std::sqrt(p * (1.0 - p) / draws);
    const double freq = static_cast<double>(plus) / draws;
    c.require(std::fabs(freq - p) <= 3.0 * sigma,
              "stochastic frequency at w=" + format_double(w) + " within 3 sigma (got " +
                  format_double(freq) + ", want " + format_double(p) + ")");
  }
}

void criterion2_forward_oracle(Check& c) {
  Rng rng(555);
  auto random_quant = [&rng](const Dims& dims, int bw) {
    QuantTensor t(dims, bw);
    for (std::size_t i = 0; i < t.size(); ++i) {
      int v;
      do {
        v = QuantTensor::min_level(bw) +
            static_cast<int>(rng.below(static_cast<std::uint64_t>(
                QuantTensor::max_level(bw) - QuantTensor::min_level(bw) + 1)));
      } while (bw == 1 && v == 0);
      t.set(i, v);
    }
    return t;
  };

  int shapes = 0;
  for (int iter = 0; iter < 40; ++iter) {
    // conv
    LayerSpec conv;
    conv.kind = LayerKind::Conv2d;
    conv.in_channels = 1 + static_cast<std::uint32_t>(rng.below(3));
    conv.out_channels = 1 + static_cast<std::uint32_t>(rng.below(4));
    conv.kernel = 1 + static_cast<std::uint32_t>(rng.below(3));
    const int bw = 1 + static_cast<int>(rng.below(2));
    conv.weight_bits = bw;
    const std::uint32_t h = conv.kernel + static_cast<std::uint32_t>(rng.below(4));
    const std::uint32_t w = conv.kernel + static_cast<std::uint32_t>(rng.below(4));
    const QuantTensor in = random_quant({1, conv.in_channels, h, w}, bw);
    const QuantTensor wt = random_quant(conv.weight_dims(), bw);
    const RealTensor got = conv2d_forward(in, wt, conv);
    const std::uint32_t oh = h - conv.kernel + 1, ow = w - conv.kernel + 1;
    bool exact = true;
    for (std::uint32_t oc = 0; oc < conv.out_channels && exact; ++oc)
      for (std::uint32_t y = 0; y < oh && exact; ++y)
        for (std::uint32_t x = 0; x < ow && exact; ++x) {
          long long acc = 0;
          for (std::uint32_t ic = 0; ic < conv.in_channels; ++ic)
            for (std::uint32_t kh = 0; kh < conv.kernel; ++kh)
              for (std::uint32_t kw = 0; kw < conv.kernel; ++kw)
                acc += static_cast<long long>(in.get(
                           (static_cast<std::size_t>(ic) * h + y + kh) * w + x + kw)) *
                       wt.get(((static_cast<std::size_t>(oc) * conv.in_channels + ic) *
                                   conv.kernel +
                               kh) *
                                  conv.kernel +
                              kw);
          exact = got[(static_cast<std::size_t>(oc) * oh + y) * ow + x] ==
                  static_cast<double>(acc);
        }
    c.require(exact, "conv oracle mismatch at shape iteration " + std::to_string(iter));
    ++shapes;

    // pool
    LayerSpec pool;
    pool.kind = LayerKind::MaxPool2d;
    pool.pool = 1 + static_cast<std::uint32_t>(rng.below(2));
    const Dims pd = {1, 1 + static_cast<std::uint32_t>(rng.below(3)),
                     pool.pool * (1 + static_cast<std::uint32_t>(rng.below(3))),
                     pool.pool * (1 + static_cast<std::uint32_t>(rng.below(3)))};
    const QuantTensor pin = random_quant(pd, bw);
    const QuantTensor pout = maxpool2d(pin, pool);
    bool pool_exact = true;
    const std::uint32_t poh = pd[2] / pool.pool, pow = pd[3] / pool.pool;
    for (std::uint32_t ch = 0; ch < pd[1] && pool_exact; ++ch)
      for (std::uint32_t y = 0; y < poh && pool_exact; ++y)
        for (std::uint32_t x = 0; x < pow && pool_exact; ++x) {
          int best = -100;
          for (std::uint32_t py = 0; py < pool.pool; ++py)
            for (std::uint32_t px = 0; px < pool.pool; ++px)
              best = std::max(best, pin.get((static_cast<std::size_t>(ch) * pd[2] +
                                             y * pool.pool + py) *
                                                pd[3] +
                                            x * pool.pool + px));
          pool_exact =
              pout.get((static_cast<std::size_t>(ch) * poh + y) * pow + x) == best;
        }
    c.require(pool_exact, "pool oracle mismatch at iteration " + std::to_string(iter));
    ++shapes;

    // fc
    LayerSpec fc;
    fc.kind = LayerKind::FullyConnected;
    fc.in_features = 1 + static_cast<std::uint32_t>(rng.below(16));
    fc.out_features = 1 + static_cast<std::uint32_t>(rng.below(8));
    fc.weight_bits = bw;
    const QuantTensor fin = random_quant({1, fc.in_features, 1, 1}, bw);
    const QuantTensor fwt = random_quant(fc.weight_dims(), bw);
    const RealTensor fout = fully_connected_forward(fin, fwt, fc);
    bool fc_exact = true;
    for (std::uint32_t o = 0; o < fc.out_features && fc_exact; ++o) {
      long long acc = 0;
      for (std::uint32_t i = 0; i < fc.in_features; ++i)
        acc += static_cast<long long>(fin.get(i)) *
               fwt.get(static_cast<std::size_t>(o) * fc.in_features + i);
      fc_exact = fout[o] == static_cast<double>(acc);
    }
    c.require(fc_exact, "fc oracle mismatch at iteration " + std::to_string(iter));
    ++shapes;
  }
  c.require(shapes >= 100, "at least 100 random shapes exercised");
  c.note(std::to_string(shapes) + " random shapes, zero tolerance");
}

void criterion3_susceptible_bits(Check& c) {
  const NetworkModel w1 = build_cnv(1, 1);
  const NetworkModel w2 = build_cnv(2, 2);
  const std::size_t bits1 = count_susceptible_bits(w1, FaultDomain::Weight);
  const std::size_t bits2 = count_susceptible_bits(w2, FaultDomain::Weight);
  c.require(bits1 == 1542848, "cnvW1A1 weight bits == 1,542,848 (got " + std::to_string(bits1) + ")");
  c.require(bits2 == 3085696, "cnvW2A2 weight bits == 3,085,696 (got " + std::to_string(bits2) + ")");
  c.require(bits2 == 2 * bits1, "exact 1:2 ratio");
  c.require(std::fabs(static_cast<double>(bits1) - 1.6e6) / 1.6e6 <= 0.10,
            "within 10% of the reported 1.6 million");
  c.require(std::fabs(static_cast<double>(bits2) - 3.2e6) / 3.2e6 <= 0.10,
            "within 10% of the reported 3.2 million");
}

void criterion4_involution_locality(Check& c) {
  const NetworkModel base = build_cnv(1, 1);
  NetworkModel net = base;
  const BitAddressSpace wspace = build_address_space(net, FaultDomain::Weight);
  const BitAddressSpace aspace = build_address_space(net, FaultDomain::Activation);
  Rng rng(987654);
  for (int i = 0; i < 10000; ++i) {
    const BitAddressSpace& space = rng.below(4) == 0 ? aspace : wspace;
    const std::size_t bit = rng.below(space.size);
    if (rng.below(2) == 0) {
      flip_bit(net, space, bit);
      flip_bit(net, space, bit);
    } else {
      inject_mbu(net, space, bit);
      inject_mbu(net, space, bit);
    }
  }
  c.require(net == base, "10,000 doubled events restore a bit-identical network");

  // locality on the toy net, scanning every bit
  const NetworkModel toy = build_toy();
  const BitAddressSpace tspace = build_address_space(toy, FaultDomain::Weight);
  bool local = true;
  for (int i = 0; i < 300 && local; ++i) {
    NetworkModel victim = toy;
    const std::size_t start = rng.below(tspace.size);
    const bool mbu = rng.below(2) == 1;
    if (mbu) {
      inject_mbu(victim, tspace, start);
    } else {
      flip_bit(victim, tspace, start);
    }
    const std::size_t burst = mbu ? std::min<std::size_t>(kMbuBurstBits, tspace.size - start) : 1;
    std::size_t global = 0;
    for (std::size_t p = 0; p < victim.param_count() && local; ++p) {
      for (std::size_t b = 0; b < victim.param(p).bit_count() && local; ++b, ++global) {
        const bool inside = global >= start && global < start + burst;
        local = (victim.param(p).storage_bit(b) != toy.param(p).storage_bit(b)) == inside;
      }
    }
  }
  c.require(local, "single events change only their addressed bits");
}

void criterion5_ols(Check& c) {
  // noiseless: exact recovery
  {
    DesignMatrix d;
    d.rows = 64;
    d.cols = 2;
    for (int i = 0; i < 64; ++i) {
      d.x.push_back(1.0);
      d.x.push_back(static_cast<double>(i));
      d.y.push_back(2.0 + 3.0 * i);
    }
    const OlsFit fit = ols_fit(d);
    c.require(std::fabs(fit.beta[0] - 2.0) < 1e-10 && std::fabs(fit.beta[1] - 3.0) < 1e-10,
              "noiseless fit recovers (2,3) to 1e-10");
  }

  // noisy 16-term synthetic vs a textbook normal-equation oracle
  const ModelSpec spec;
  const double truth[16] = {74.76, 5.37, 0.45, 0.65,  0.06,  -0.19, -0.33, -0.02,
                            -0.28, 0.04, -0.06, 0.12, -0.02, 0.02,  -0.04, 0.02};
  Rng rng(13579);
  DesignMatrix d;
  d.rows = 2000;
  d.cols = 16;
  const std::size_t counts[] = {1, 2, 5, 10, 20, 50, 100};
  for (std::size_t r = 0; r < 2000; ++r) {
    const auto row = spec.encode_row(1.0 + static_cast<double>(rng.below(2)),
                                     static_cast<double>(rng.below(2)),
                                     static_cast<double>(rng.below(2)),
                                     static_cast<double>(counts[rng.below(7)]));
    d.x.insert(d.x.end(), row.begin(), row.end());
    double y = 0.0;
    for (int t = 0; t < 16; ++t) y += row[static_cast<std::size_t>(t)] * truth[t];
    d.y.push_back(y + 0.1 * rng.normal());
  }
  const OlsFit fit = ols_fit(d);

  // oracle: Gauss-Jordan inverse of X^T X
  std::vector<std::vector<double>> a(16, std::vector<double>(32, 0.0));
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < 2000; ++r)
        s += d.x[r * 16 + static_cast<std::size_t>(i)] * d.x[r * 16 + static_cast<std::size_t>(j)];
      a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
    }
    a[static_cast<std::size_t>(i)][16 + static_cast<std::size_t>(i)] = 1.0;
  }
  for (std::size_t col = 0; col < 16; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < 16; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    const double diag = a[col][col];
    for (std::size_t j = 0; j < 32; ++j) a[col][j] /= diag;
    for (std::size_t r = 0; r < 16; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < 32; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<double> xty(16, 0.0), beta(16, 0.0);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t r = 0; r < 2000; ++r) xty[i] += d.x[r * 16 + i] * d.y[r];
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) beta[i] += a[i][16 + j] * xty[j];
  double rss = 0.0, mean = 0.0, tss = 0.0;
  for (double v : d.y) mean += v;
  mean /= 2000.0;
  for (std::size_t r = 0; r < 2000; ++r) {
    double yhat = 0.0;
    for (std::size_t j = 0; j < 16; ++j) yhat += d.x[r * 16 + j] * beta[j];
    rss += (d.y[r] - yhat) * (d.y[r] - yhat);
    tss += (d.y[r] - mean) * (d.y[r] - mean);
  }
  const double s2 = rss / (2000.0 - 16.0);
  const double r2 = 1.0 - rss / tss;
  const double adj = 1.0 - (1.0 - r2) * (2000.0 - 1.0) / (2000.0 - 16.0 - 1.0);

  bool within_5se = true, matches = true;
  for (std::size_t j = 0; j < 16; ++j) {
    within_5se = within_5se && std::fabs(fit.beta[j] - truth[j]) <= 5.0 * fit.std_error[j];
    const double se = std::sqrt(s2 * a[j][16 + j]);
    matches = matches && std::fabs(fit.beta[j] - beta[j]) < 1e-8 &&
              std::fabs(fit.std_error[j] - se) < 1e-8 &&
              std::fabs(fit.t_value[j] - beta[j] / se) < 1e-6;
  }
  c.require(within_5se, "every coefficient within 5 standard errors of the truth");
  c.require(matches, "beta/se/t match the textbook oracle to 1e-8");
  c.require(std::fabs(fit.r2 - r2) < 1e-8, "R^2 matches the oracle");
  c.require(std::fabs(fit.adjusted_r2 - adj) < 1e-8, "adjusted R^2 matches the oracle");
}

void criterion6_prediction_fixture(Check& c) {
  const fs::path coeff = g_dir / "table1_fixture.csv";
  {
    std::ofstream os(coeff);
    os << "term,estimate,std_error,t_value,significance\n";
    const char* names[16] = {"b0",  "b1",  "b2",  "b3",   "b4",   "b12",  "b13",  "b14",
                             "b23", "b24", "b34", "b123", "b124", "b134", "b234", "b1234"};
    const double est[16] = {74.76, 5.37, 0.45, 0.65,  0.06,  -0.19, -0.33, -0.02,
                            -0.28, 0.04, -0.06, 0.12, -0.02, 0.02,  -0.04, 0.02};
    const double se[16] = {0.68, 0.43, 0.42, 0.41, 0.01, 0.27, 0.27, 0.01,
                           0.26, 0.01, 0.01, 0.16, 0.0,  0.0,  0.0,  0.0};
    for (int i = 0; i < 16; ++i)
      os << names[i] << ',' << est[i] << ',' << se[i] << ",0,\n";
  }
  const CoefficientFile file = load_coefficients(coeff.string());
  const double ref = predict(file.beta, file.spec, 0, 0, 0, 0);
  const double x1 = predict(file.beta, file.spec, 1, 0, 0, 0);
  c.require(std::fabs(ref - 74.76) < 1e-12,
            "all-reference prediction = 74.76 (got " + format_double(ref) + ")");
  c.require(std::fabs(x1 - 80.13) < 1e-12,
            "X1=1 prediction = 80.13 (got " + format_double(x1) + ")");
}

void criterion7_degradation_trend(Check& c) {
  const NetworkModel& toy = trained_toy();
  const double train_acc = accuracy(toy, toy_train_set().samples);
  c.require(train_acc >= 95.0,
            "toy training accuracy >= 95% (got " + format_double(train_acc) + ")");

  const std::vector<std::size_t> counts = {1, 2, 5, 10, 20, 50, 100};
  std::map<FaultMode, std::vector<ScenarioSummary>> summaries;
  for (FaultMode mode : {FaultMode::SEU, FaultMode::MBU}) {
    std::vector<GridEntry> entries;
    for (std::size_t n : counts) {
      ScenarioConfig cfg;
      cfg.mode = mode;
      cfg.domain = FaultDomain::Weight;
      cfg.n_faults = n;
      cfg.trials = 200;
      cfg.batch_size = toy_eval_set().samples.size();
      cfg.base_seed = 90210;
      entries.push_back({&toy, &toy_eval_set().samples, cfg});
    }
    const ResultsTable table = run_grid(entries, 0);
    summaries[mode] = summarize(table);
  }

  for (FaultMode mode : {FaultMode::SEU, FaultMode::MBU}) {
    std::vector<double> xs, drops;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      xs.push_back(static_cast<double>(counts[i]));
      drops.push_back(summaries[mode][i].mean_drop);
    }
    const double rho = spearman(xs, drops);
    c.require(rho >= 0.9, std::string(fault_mode_name(mode)) +
                              " mean drop Spearman rho >= 0.9 (got " + format_double(rho) + ")");
    std::string trend = std::string(fault_mode_name(mode)) + " mean drops:";
    for (double dr : drops) trend += " " + format_double(std::round(dr * 1000.0) / 1000.0);
    c.note(trend);
  }

  const ScenarioSummary& seu100 = summaries[FaultMode::SEU].back();
  const ScenarioSummary& mbu100 = summaries[FaultMode::MBU].back();
  c.require(mbu100.mean_drop >= seu100.mean_drop,
            "mean MBU drop >= mean SEU drop at 100 faults (" + format_double(mbu100.mean_drop) +
                " vs " + format_double(seu100.mean_drop) + ")");
  c.require(mbu100.worst_drop >= 2.0 * mbu100.mean_drop,
            "worst-case MBU-100 drop >= 2x its mean drop (worst " +
                format_double(mbu100.worst_drop) + ", mean " + format_double(mbu100.mean_drop) +
                ")");
}

void criterion8_in_layer_pipeline(Check& c) {
  const std::vector<std::size_t> counts = {5, 10, 50, 100};
  std::vector<GridEntry> entries;
  for (int bits : {1, 2}) {
    const NetworkModel& net = trained_cnv(bits);
    for (FaultMode mode : {FaultMode::SEU, FaultMode::MBU}) {
      for (std::size_t layer = 1; layer <= 9; ++layer) {
        for (std::size_t n : counts) {
          ScenarioConfig cfg;
          cfg.mode = mode;
          cfg.domain = FaultDomain::Weight;
          cfg.layer = layer;
          cfg.n_faults = n;
          cfg.trials = 4;
          cfg.batch_size = cnv_eval_set().samples.size();
          cfg.base_seed = 777000 + static_cast<std::uint64_t>(bits);
          entries.push_back({&net, &cnv_eval_set().samples, cfg});
        }
      }
    }
  }
  // zero-fault scenarios for the n=0 heatmap column
  for (std::size_t layer = 1; layer <= 9; ++layer) {
    ScenarioConfig cfg;
    cfg.mode = FaultMode::SEU;
    cfg.domain = FaultDomain::Weight;
    cfg.layer = layer;
    cfg.n_faults = 0;
    cfg.trials = 2;
    cfg.batch_size = cnv_eval_set().samples.size();
    cfg.base_seed = 777003;
    entries.push_back({&trained_cnv(1), &cnv_eval_set().samples, cfg});
  }
  c.require(entries.size() == 144 + 9, "2 x 2 x 9 x 4 grid = 144 scenarios plus 9 zero-fault");

  const ResultsTable table = run_grid(entries, 0);
  c.require(table.rows.size() == 144 * 4 + 9 * 2, "row count matches trials");

  const HeatmapGrid grid = layer_drop_probability(table, 1.0);
  c.require(grid.layers.size() == 9, "9 heatmap rows");
  c.require(grid.fault_counts == std::vector<std::size_t>{0, 5, 10, 50, 100},
            "columns are the fault counts plus n=0");
  bool cells_ok = true, zero_ok = true, present = true;
  for (std::size_t row = 0; row < grid.layers.size(); ++row) {
    for (std::size_t col = 0; col < grid.fault_counts.size(); ++col) {
      present = present && grid.cell_present(row, col);
      const double p = grid.probability[grid.index(row, col)];
      cells_ok = cells_ok && p >= 0.0 && p <= 1.0;
      if (grid.fault_counts[col] == 0) zero_ok = zero_ok && p == 0.0;
    }
  }
  c.require(present, "no empty cells in the 9x5 grid");
  c.require(cells_ok, "all cells in [0,1]");
  c.require(zero_ok, "n=0 column is all zeros");

  const ModelSpec spec{ModelKind::InLayer};
  const DesignMatrix d = build_design_matrix(table, spec);
  const OlsFit fit = ols_fit(d);
  c.require(std::isfinite(fit.adjusted_r2), "in-layer adjusted R^2 is finite");
  c.require(fit.adjusted_r2 <= fit.r2, "adjusted R^2 <= R^2");
  c.note("in-layer fit: R^2=" + format_double(fit.r2) +
         " adjusted=" + format_double(fit.adjusted_r2));

  save_heatmap_csv(grid, (g_dir / "acceptance_heatmap.csv").string());
}

void criterion9_bfa(Check& c) {
  const NetworkModel& toy = trained_toy();
  const std::size_t bits = count_susceptible_bits(toy, FaultDomain::Weight);
  c.require(bits <= 4096, "attack fixture has <= 4096 weight bits");

  std::vector<TrainingSample> eval(toy_eval_set().samples.begin(),
                                   toy_eval_set().samples.begin() + 16);

  // exhaustive oracle for the best single flip
  const BitAddressSpace space = build_address_space(toy, FaultDomain::Weight);
  double best_loss = mean_loss(toy, eval);
  std::size_t best_bit = space.size;
  NetworkModel scratch = toy;
  for (std::size_t bit = 0; bit < space.size; ++bit) {
    flip_bit(scratch, space, bit);
    const double loss = mean_loss(scratch, eval);
    flip_bit(scratch, space, bit);
    if (loss > best_loss) {
      best_loss = loss;
      best_bit = bit;
    }
  }

  const AttackResult one = bit_search_attack(toy, eval, AttackBudget{1});
  c.require(one.flipped_bits.size() == 1 && best_bit != space.size &&
                one.flipped_bits[0] == best_bit,
            "greedy budget-1 equals the exhaustive best flip");

  const AttackResult ten = bit_search_attack(toy, eval, AttackBudget{10});
  bool monotone = true;
  for (std::size_t i = 1; i < ten.loss_trace.size(); ++i) {
    monotone = monotone && ten.loss_trace[i] >= ten.loss_trace[i - 1];
  }
  c.require(monotone, "budget-10 loss trace is monotone non-decreasing");
  c.require(ten.flipped_bits.size() <= 10, "Hamming distance within budget");
}

void criterion10_reproducibility(Check& c) {
  auto pipeline = [&](const std::string& tag, int threads) -> std::vector<std::string> {
    const std::string base = (g_dir / tag).string();
    bool ok = true;
    ok = ok && run_cli("train --arch toy --synthetic --images 100 --classes 10 --epochs 8 "
                       "--lr 0.02 --seed 42 --out " + base + "_w1.qnfw") == 0;
    ok = ok && run_cli("train --arch toyW2A2 --synthetic --images 100 --classes 10 --epochs 8 "
                       "--lr 0.02 --seed 43 --out " + base + "_w2.qnfw") == 0;
    ok = ok && run_cli("campaign --weights " + base + "_w1.qnfw" +
                       " --synthetic --images 40 --mode seu,mbu --domain weight "
                       "--layer 1,2 --faults 2,10 --trials 6 --seed 77 --threads " +
                       std::to_string(threads) + " --out " + base + "_r1.csv") == 0;
    ok = ok && run_cli("campaign --weights " + base + "_w2.qnfw" +
                       " --synthetic --images 40 --mode seu,mbu --domain weight "
                       "--layer 1,2 --faults 2,10 --trials 6 --seed 77 --threads " +
                       std::to_string(threads) + " --out " + base + "_r2.csv") == 0;
    if (ok) {
      const ResultsTable r1 = load_results(base + "_r1.csv");
      const ResultsTable r2 = load_results(base + "_r2.csv");
      ResultsTable both = r1;
      both.rows.insert(both.rows.end(), r2.rows.begin(), r2.rows.end());
      save_results(both, base + "_all.csv");
    }
    ok = ok && run_cli("fit --results " + base + "_all.csv --out " + base + "_fit.csv") == 0;
    ok = ok && run_cli("heatmap --results " + base + "_all.csv --threshold 1.0 --out " + base +
                       "_heat.csv") == 0;
    if (!ok) return {};
    return {slurp(base + "_w1.qnfw"), slurp(base + "_w2.qnfw"), slurp(base + "_r1.csv"),
            slurp(base + "_r2.csv"),  slurp(base + "_fit.csv"), slurp(base + "_heat.csv")};
  };

  const auto a = pipeline("runA", 1);
  const auto b = pipeline("runB", 1);
  const auto t8 = pipeline("runT8", 8);
  c.require(!a.empty() && !b.empty() && !t8.empty(), "all pipeline stages exit 0");
  if (!a.empty() && !b.empty() && !t8.empty()) {
    c.require(a == b, "two identical runs produce byte-identical outputs");
    c.require(a == t8, "--threads 1 and --threads 8 produce byte-identical outputs");
  }
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Check&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <qfi binary> [criterion numbers...]\n";
    return 2;
  }
  g_cli = argv[1];
  g_dir = fs::temp_directory_path() / "qfi_acceptance";
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);

  const std::vector<Criterion> criteria = {
      {1, "quantizer conformance", criterion1_quantizer},
      {2, "forward-pass oracle", criterion2_forward_oracle},
      {3, "susceptible-bit accounting", criterion3_susceptible_bits},
      {4, "fault involution and locality", criterion4_involution_locality},
      {5, "OLS correctness", criterion5_ols},
      {6, "prediction fixture", criterion6_prediction_fixture},
      {7, "degradation trend", criterion7_degradation_trend},
      {8, "in-layer pipeline", criterion8_in_layer_pipeline},
      {9, "bit-search attack sanity", criterion9_bfa},
      {10, "end-to-end reproducibility", criterion10_reproducibility},
  };

  std::vector<int> selected;
  for (int i = 2; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), criterion.id) == selected.end()) {
      continue;
    }
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.fn(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.notes.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (check.ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id << ": "
              << criterion.title << " (" << format_double(std::round(elapsed * 10.0) / 10.0)
              << "s)\n";
    for (const std::string& note : check.notes) std::cout << "       - " << note << '\n';
    if (!check.ok) ++failures;
  }
  if (failures == 0) {
    std::cout << "all acceptance criteria passed\n";
    return 0;
  }
  std::cout << failures << " criterion(s) failed\n";
  return 1;
}
