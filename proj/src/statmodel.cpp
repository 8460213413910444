#include "qfi/statmodel.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qfi {

const std::array<const char*, ModelSpec::kTerms>& ModelSpec::term_names() {
  static const std::array<const char*, kTerms> names = {
      "b0",  "b1",   "b2",   "b3",   "b4",   "b12",  "b13",  "b14",
      "b23", "b24",  "b34",  "b123", "b124", "b134", "b234", "b1234"};
  return names;
}

const std::array<std::array<int, 4>, ModelSpec::kTerms>& ModelSpec::term_factors() {
  // 0 entries are unused slots.
  static const std::array<std::array<int, 4>, kTerms> factors = {{
      {0, 0, 0, 0},  // b0
      {1, 0, 0, 0},  {2, 0, 0, 0},  {3, 0, 0, 0},  {4, 0, 0, 0},
      {1, 2, 0, 0},  {1, 3, 0, 0},  {1, 4, 0, 0},
      {2, 3, 0, 0},  {2, 4, 0, 0},  {3, 4, 0, 0},
      {1, 2, 3, 0},  {1, 2, 4, 0},  {1, 3, 4, 0},  {2, 3, 4, 0},
      {1, 2, 3, 4},
  }};
  return factors;
}

std::array<double, ModelSpec::kTerms> ModelSpec::encode_row(double x1, double x2, double x3,
                                                            double x4) const {
  const double x[5] = {1.0, x1, x2, x3, x4};
  std::array<double, kTerms> row;
  const auto& factors = term_factors();
  for (std::size_t t = 0; t < kTerms; ++t) {
    double v = 1.0;
    for (int f : factors[t]) {
      if (f != 0) v *= x[f];
    }
    row[t] = v;
  }
  return row;
}

DesignMatrix build_design_matrix(const ResultsTable& table, const ModelSpec& spec) {
  if (table.rows.empty()) throw invalid_value_error("empty results table");
  DesignMatrix d;
  d.rows = table.rows.size();
  d.cols = ModelSpec::kTerms;
  d.x.reserve(d.rows * d.cols);
  d.y.reserve(d.rows);
  for (const TrialRecord& r : table.rows) {
    if (spec.kind == ModelKind::AcrossNetwork && r.layer != 0) {
      throw invalid_value_error("across-network model given in-layer row '" + r.scenario_id + "'");
    }
    if (spec.kind == ModelKind::InLayer && (r.layer < 1 || r.layer > 9)) {
      throw invalid_value_error("in-layer model given whole-network row '" + r.scenario_id + "'");
    }
    const double x1 = static_cast<double>(r.wbits);
    const double x2 = r.mode == FaultMode::MBU ? 1.0 : 0.0;
    const double x3 = spec.kind == ModelKind::AcrossNetwork
                          ? (r.domain == FaultDomain::Activation ? 1.0 : 0.0)
                          : static_cast<double>(r.layer);
    const double x4 = static_cast<double>(r.n_faults);
    const auto row = spec.encode_row(x1, x2, x3, x4);
    d.x.insert(d.x.end(), row.begin(), row.end());
    d.y.push_back(r.faulty_acc);
  }
  return d;
}

OlsFit ols_fit(const DesignMatrix& d, const std::vector<std::string>& names) {
  const std::size_t n = d.rows;
  const std::size_t p = d.cols;
  if (n <= p) throw numeric_error("underdetermined system: " + std::to_string(n) + " rows for " +
                                  std::to_string(p) + " columns");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
      d.x.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::Map<const Eigen::VectorXd> y(d.y.data(), static_cast<Eigen::Index>(n));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const auto rank = qr.rank();
  if (rank < static_cast<Eigen::Index>(p)) {
    std::string cols;
    for (Eigen::Index k = rank; k < static_cast<Eigen::Index>(p); ++k) {
      const auto idx = qr.colsPermutation().indices()(k);
      if (!cols.empty()) cols += ", ";
      cols += names.size() == p ? names[static_cast<std::size_t>(idx)]
                                : "column " + std::to_string(idx);
    }
    throw numeric_error("rank-deficient design matrix (rank " + std::to_string(rank) + " of " +
                        std::to_string(p) + "); dependent: " + cols);
  }

  OlsFit fit;
  fit.n = n;
  fit.p = p;
  fit.dof = n - p;

  Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double rss = resid.squaredNorm();
  const double mean_y = y.mean();
  const double tss = (y.array() - mean_y).square().sum();
  fit.s2 = rss / static_cast<double>(fit.dof);
  fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  fit.adjusted_r2 =
      1.0 - (1.0 - fit.r2) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n - p) - 1.0);

  // (X^T X)^-1 diagonal from the R factor: X P = Q R, so
  // (X^T X)^-1 = P (R^T R)^-1 P^T.
  const Eigen::MatrixXd R = qr.matrixR()
                                .topLeftCorner(static_cast<Eigen::Index>(p),
                                               static_cast<Eigen::Index>(p))
                                .triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(
          static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
  const Eigen::VectorXd diag_perm = (Rinv * Rinv.transpose()).diagonal();
  Eigen::VectorXd diag(static_cast<Eigen::Index>(p));
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(p); ++k) {
    diag(qr.colsPermutation().indices()(k)) = diag_perm(k);
  }

  boost::math::students_t_distribution<double> tdist(static_cast<double>(fit.dof));
  fit.beta.resize(p);
  fit.std_error.resize(p);
  fit.t_value.resize(p);
  fit.p_value.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    fit.beta[j] = beta(static_cast<Eigen::Index>(j));
    fit.std_error[j] = std::sqrt(fit.s2 * diag(static_cast<Eigen::Index>(j)));
    fit.t_value[j] = fit.std_error[j] > 0.0 ? fit.beta[j] / fit.std_error[j] : 0.0;
    fit.p_value[j] =
        2.0 * boost::math::cdf(boost::math::complement(tdist, std::fabs(fit.t_value[j])));
  }
  return fit;
}

double predict(const std::vector<double>& beta, const ModelSpec& spec, double x1, double x2,
               double x3, double x4) {
  if (beta.size() != ModelSpec::kTerms) {
    throw invalid_value_error("coefficient vector must have 16 entries");
  }
  const auto row = spec.encode_row(x1, x2, x3, x4);
  double v = 0.0;
  for (std::size_t t = 0; t < ModelSpec::kTerms; ++t) v += row[t] * beta[t];
  return v;
}

std::string significance_tail(double p_value) {
  if (p_value < 0.01) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

std::string coefficient_report(const OlsFit& fit, const ModelSpec& spec) {
  std::ostringstream os;
  os << "term,estimate,std_error,t_value,significance\n";
  const auto& names = ModelSpec::term_names();
  for (std::size_t t = 0; t < ModelSpec::kTerms; ++t) {
    os << names[t] << ',' << format_double(fit.beta[t]) << ',' << format_double(fit.std_error[t])
       << ',' << format_double(fit.t_value[t]) << ',' << significance_tail(fit.p_value[t])
       << '\n';
  }
  os << "# model=" << (spec.kind == ModelKind::AcrossNetwork ? "across-network" : "in-layer")
     << ",r2=" << format_double(fit.r2) << ",adjusted_r2=" << format_double(fit.adjusted_r2)
     << ",n=" << fit.n << ",dof=" << fit.dof << '\n';
  return os.str();
}

void save_coefficients(const OlsFit& fit, const ModelSpec& spec, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os << coefficient_report(fit, spec);
  if (!os) throw io_error("write failed for '" + path + "'");
}

CoefficientFile load_coefficients(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != "term,estimate,std_error,t_value,significance") {
    throw io_error("unexpected coefficient header");
  }
  CoefficientFile file;
  file.beta.assign(ModelSpec::kTerms, 0.0);
  std::vector<bool> seen(ModelSpec::kTerms, false);
  const auto& names = ModelSpec::term_names();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("in-layer") != std::string::npos) file.spec.kind = ModelKind::InLayer;
      continue;
    }
    std::stringstream ss(line);
    std::string term, estimate;
    std::getline(ss, term, ',');
    std::getline(ss, estimate, ',');
    bool matched = false;
    for (std::size_t t = 0; t < ModelSpec::kTerms; ++t) {
      if (term == names[t]) {
        file.beta[t] = std::stod(estimate);
        seen[t] = true;
        matched = true;
        break;
      }
    }
    if (!matched) throw io_error("unknown coefficient term '" + term + "'");
  }
  for (std::size_t t = 0; t < ModelSpec::kTerms; ++t) {
    if (!seen[t]) throw io_error(std::string("missing coefficient term '") + names[t] + "'");
  }
  return file;
}

}  // namespace qfi
