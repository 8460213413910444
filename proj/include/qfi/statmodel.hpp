#pragma once

#include <array>
#include <string>
#include <vector>

#include "qfi/campaign.hpp"

namespace qfi {

enum class ModelKind { AcrossNetwork, InLayer };

// The full 2^4 factorial over (X1 quantization level, X2 fault mode,
// X3 domain-or-layer, X4 fault count): intercept, 4 mains, 6 pairwise,
// 4 triple, 1 quadruple. Encodings: X1 = bit width {1,2}; X2 SEU=0/MBU=1;
// X3 across-network weight=0/activation=1, in-layer = layer number 1..9;
// X4 = fault count.
struct ModelSpec {
  ModelKind kind = ModelKind::AcrossNetwork;

  static constexpr std::size_t kTerms = 16;
  // Fixed term order: b0, b1..b4, b12, b13, b14, b23, b24, b34,
  // b123, b124, b134, b234, b1234.
  static const std::array<const char*, kTerms>& term_names();
  // Factor index sets per term (subset of {1,2,3,4}).
  static const std::array<std::array<int, 4>, kTerms>& term_factors();

  // One design row from encoded factor values.
  std::array<double, kTerms> encode_row(double x1, double x2, double x3, double x4) const;
};

struct DesignMatrix {
  std::vector<double> x;  // row-major, rows x 16
  std::vector<double> y;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Encodes a results table into (X, y) with y = faulty accuracy. Rows must all
// belong to the spec's scenario family (layer == 0 for across-network,
// layer in 1..9 for in-layer).
DesignMatrix build_design_matrix(const ResultsTable& table, const ModelSpec& spec);

struct OlsFit {
  std::vector<double> beta;
  std::vector<double> std_error;
  std::vector<double> t_value;
  std::vector<double> p_value;  // two-sided
  double s2 = 0.0;              // residual variance RSS/(n-p)
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t dof = 0;  // n - p
};

// Least squares via column-pivoted QR; standard errors from the R factor.
// Throws numeric_error on rank deficiency (naming the offending columns) or
// when rows <= cols. `names` labels columns in diagnostics (optional).
OlsFit ols_fit(const DesignMatrix& d, const std::vector<std::string>& names = {});

// E[Y|X]: the encoded design row dotted with the coefficients.
double predict(const std::vector<double>& beta, const ModelSpec& spec, double x1, double x2,
               double x3, double x4);

// Significance tail per two-sided p-value: "**" (<.01), "*" (<.05), "".
std::string significance_tail(double p_value);

// Coefficient CSV: term,estimate,std_error,t_value,significance plus a
// trailing summary comment line with R2, adjusted R2, n, dof.
std::string coefficient_report(const OlsFit& fit, const ModelSpec& spec);
void save_coefficients(const OlsFit& fit, const ModelSpec& spec, const std::string& path);

// Reads a coefficient CSV back (estimates only are required for predict).
struct CoefficientFile {
  ModelSpec spec;
  std::vector<double> beta;
};
CoefficientFile load_coefficients(const std::string& path);

}  // namespace qfi
