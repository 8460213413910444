#pragma once

#include <string>
#include <vector>

#include "qfi/campaign.hpp"

namespace qfi {

// Per-(layer, fault count) probability of an accuracy drop greater than tau
// percentage points. Cells with no trials are flagged, never silently zero.
struct HeatmapGrid {
  std::vector<std::size_t> layers;        // row labels, ascending
  std::vector<std::size_t> fault_counts;  // column labels, ascending
  std::vector<double> probability;        // row-major layers x counts
  std::vector<std::size_t> trial_count;   // same shape; 0 marks an empty cell
  double threshold = 1.0;

  std::size_t index(std::size_t row, std::size_t col) const {
    return row * fault_counts.size() + col;
  }
  bool cell_present(std::size_t row, std::size_t col) const {
    return trial_count[index(row, col)] > 0;
  }
};

// Builds the grid from in-layer trial records (rows with layer == 0 are
// rejected). Rows/columns are the distinct layers/fault counts present.
HeatmapGrid layer_drop_probability(const ResultsTable& table, double threshold);

// h(p) = -p log2 p - (1-p) log2 (1-p), with h(0) = h(1) = 0.
double binary_entropy(double p);

// Entropy-based layer scores over a heatmap grid.
struct LayerEntropyScores {
  std::vector<std::size_t> layers;
  std::vector<double> entropy_score;     // mean binary entropy over fault counts
  std::vector<double> mean_drop_prob;    // mean cell probability per layer
  std::vector<double> likelihood;        // per-cell fault-tolerance likelihood 1-p (grid shape)
  std::vector<std::size_t> ranking;      // layer labels, most vulnerable first
};
LayerEntropyScores layer_entropy_score(const HeatmapGrid& grid);

// Header row of fault counts, one row per layer; empty cells print NA.
std::string heatmap_csv(const HeatmapGrid& grid);
void save_heatmap_csv(const HeatmapGrid& grid, const std::string& path);

// Grid rendering with the probability written in each square.
std::string heatmap_svg(const HeatmapGrid& grid);
void save_heatmap_svg(const HeatmapGrid& grid, const std::string& path);

}  // namespace qfi
