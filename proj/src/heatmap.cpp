#include "qfi/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace qfi {

HeatmapGrid layer_drop_probability(const ResultsTable& table, double threshold) {
  if (threshold < 0.0) throw invalid_value_error("threshold must be non-negative");
  if (table.rows.empty()) throw invalid_value_error("empty results table");

  std::vector<std::size_t> layers;
  std::vector<std::size_t> counts;
  for (const TrialRecord& r : table.rows) {
    if (r.layer == 0) {
      throw invalid_value_error("heatmap needs in-layer rows; '" + r.scenario_id +
                                "' is whole-network");
    }
    layers.push_back(r.layer);
    counts.push_back(r.n_faults);
  }
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

  HeatmapGrid grid;
  grid.layers = layers;
  grid.fault_counts = counts;
  grid.threshold = threshold;
  grid.probability.assign(layers.size() * counts.size(), 0.0);
  grid.trial_count.assign(layers.size() * counts.size(), 0);

  std::vector<std::size_t> dropped(layers.size() * counts.size(), 0);
  for (const TrialRecord& r : table.rows) {
    const std::size_t row = static_cast<std::size_t>(
        std::lower_bound(layers.begin(), layers.end(), r.layer) - layers.begin());
    const std::size_t col = static_cast<std::size_t>(
        std::lower_bound(counts.begin(), counts.end(), r.n_faults) - counts.begin());
    const std::size_t i = grid.index(row, col);
    grid.trial_count[i] += 1;
    if (r.drop > threshold) dropped[i] += 1;
  }
  for (std::size_t i = 0; i < grid.probability.size(); ++i) {
    if (grid.trial_count[i] > 0) {
      grid.probability[i] =
          static_cast<double>(dropped[i]) / static_cast<double>(grid.trial_count[i]);
    }
  }
  return grid;
}

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) throw invalid_value_error("probability outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

LayerEntropyScores layer_entropy_score(const HeatmapGrid& grid) {
  LayerEntropyScores scores;
  scores.layers = grid.layers;
  scores.likelihood.assign(grid.probability.size(), 0.0);
  for (std::size_t i = 0; i < grid.probability.size(); ++i) {
    scores.likelihood[i] = 1.0 - grid.probability[i];
  }
  scores.entropy_score.resize(grid.layers.size(), 0.0);
  scores.mean_drop_prob.resize(grid.layers.size(), 0.0);
  for (std::size_t row = 0; row < grid.layers.size(); ++row) {
    double h = 0.0;
    double p = 0.0;
    std::size_t cells = 0;
    for (std::size_t col = 0; col < grid.fault_counts.size(); ++col) {
      if (!grid.cell_present(row, col)) continue;
      h += binary_entropy(grid.probability[grid.index(row, col)]);
      p += grid.probability[grid.index(row, col)];
      ++cells;
    }
    scores.entropy_score[row] = cells > 0 ? h / static_cast<double>(cells) : 0.0;
    scores.mean_drop_prob[row] = cells > 0 ? p / static_cast<double>(cells) : 0.0;
  }
  std::vector<std::size_t> order(grid.layers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores.mean_drop_prob[a] > scores.mean_drop_prob[b];
  });
  scores.ranking.reserve(order.size());
  for (std::size_t i : order) scores.ranking.push_back(grid.layers[i]);
  return scores;
}

std::string heatmap_csv(const HeatmapGrid& grid) {
  std::ostringstream os;
  os << "layer";
  for (std::size_t c : grid.fault_counts) os << ',' << c;
  os << '\n';
  for (std::size_t row = 0; row < grid.layers.size(); ++row) {
    os << grid.layers[row];
    for (std::size_t col = 0; col < grid.fault_counts.size(); ++col) {
      os << ',';
      if (grid.cell_present(row, col)) {
        os << format_double(grid.probability[grid.index(row, col)]);
      } else {
        os << "NA";
      }
    }
    os << '\n';
  }
  return os.str();
}

void save_heatmap_csv(const HeatmapGrid& grid, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os << heatmap_csv(grid);
  if (!os) throw io_error("write failed for '" + path + "'");
}

namespace {

std::string cell_color(double p) {
  // white (p=0) to deep red (p=1)
  const int r = 255;
  const int gb = static_cast<int>(std::lround(255.0 * (1.0 - p)));
  std::ostringstream os;
  os << "rgb(" << r << ',' << gb << ',' << gb << ')';
  return os.str();
}

std::string prob_label(double p) {
  std::ostringstream os;
  const double rounded = std::round(p * 100.0) / 100.0;
  os << rounded;
  return os.str();
}

}  // namespace

std::string heatmap_svg(const HeatmapGrid& grid) {
  const int cell = 56;
  const int left = 72;
  const int top = 40;
  const int width = left + cell * static_cast<int>(grid.fault_counts.size()) + 16;
  const int height = top + cell * static_cast<int>(grid.layers.size()) + 16;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"8\" y=\"20\">drop probability (tau=" << format_double(grid.threshold)
     << ")</text>\n";
  for (std::size_t col = 0; col < grid.fault_counts.size(); ++col) {
    os << "<text x=\"" << left + cell * static_cast<int>(col) + cell / 2 << "\" y=\"" << top - 8
       << "\" text-anchor=\"middle\">n=" << grid.fault_counts[col] << "</text>\n";
  }
  for (std::size_t row = 0; row < grid.layers.size(); ++row) {
    const int y = top + cell * static_cast<int>(row);
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + cell / 2 + 4
       << "\" text-anchor=\"end\">L" << grid.layers[row] << "</text>\n";
    for (std::size_t col = 0; col < grid.fault_counts.size(); ++col) {
      const int x = left + cell * static_cast<int>(col);
      if (grid.cell_present(row, col)) {
        const double p = grid.probability[grid.index(row, col)];
        os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
           << cell << "\" fill=\"" << cell_color(p) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
           << "\" text-anchor=\"middle\">" << prob_label(p) << "</text>\n";
      } else {
        os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
           << cell << "\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"4\"/>\n";
        os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
           << "\" text-anchor=\"middle\">NA</text>\n";
      }
    }
  }
  os << "</svg>\n";
  return os.str();
}

void save_heatmap_svg(const HeatmapGrid& grid, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os << heatmap_svg(grid);
  if (!os) throw io_error("write failed for '" + path + "'");
}

}  // namespace qfi
