#pragma once

#include "maximin/core.hpp"
#include "maximin/random.hpp"
#include "maximin/theory.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace maximin {

enum class XScale {
  unit,   // X_ij ~ N(0, 1): the theorem regimes
  inv_n,  // X_ij ~ N(0, 1/n): the figure-reproduction generative model
};

enum class NoiseKind { gaussian, laplace, sparse_outliers };

struct GeneratorSpec {
  int m = 0;
  int n = 0;
  XScale x_scale = XScale::unit;
  NoiseKind noise = NoiseKind::gaussian;
  double sigma = 0.0;              // gaussian std / laplace scale (location 0)
  double outlier_frac = 0.0;       // sparse_outliers: fraction p, 0 <= p < 1/2
  double outlier_magnitude = 1.0;  // sparse_outliers: |e_i| = M on corrupted indices
  std::uint64_t seed = 0;

  void validate() const {
    require(m >= 1 && n >= 1, "GeneratorSpec: m, n must be >= 1");
    require(sigma >= 0.0, "GeneratorSpec: sigma must be >= 0");
    if (noise == NoiseKind::sparse_outliers) {
      require(outlier_frac >= 0.0 && outlier_frac < 0.5,
              "GeneratorSpec: outlier fraction must be in [0, 1/2)");
      require(outlier_magnitude > 0.0, "GeneratorSpec: outlier magnitude must be > 0");
    }
  }
};

struct Instance {
  Matrix X;
  GroundTruth truth;
  Vector y;
};

/// y = X w* + e with w* uniform over {-1,+1}^n. Draw order (w*, X, e) is part
/// of the determinism contract: identical spec and seed give identical bytes.
inline Instance generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Instance inst;
  inst.truth.w_star = rng.sign_vector(spec.n);
  const double xs = spec.x_scale == XScale::unit ? 1.0 : 1.0 / std::sqrt(double(spec.n));
  inst.X = rng.normal_matrix(spec.m, spec.n, xs);
  inst.truth.sigma = spec.noise == NoiseKind::sparse_outliers ? spec.outlier_magnitude : spec.sigma;
  switch (spec.noise) {
    case NoiseKind::gaussian:
      inst.truth.e = rng.normal_vector(spec.m, spec.sigma);
      break;
    case NoiseKind::laplace: {
      inst.truth.e.resize(spec.m);
      for (int i = 0; i < spec.m; ++i) inst.truth.e[i] = rng.laplace(spec.sigma);
      break;
    }
    case NoiseKind::sparse_outliers: {
      inst.truth.e = Vector::Zero(spec.m);
      inst.truth.outlier_mask = std::vector<bool>(static_cast<std::size_t>(spec.m), false);
      const auto perm = rng.permutation(spec.m);
      const int k = static_cast<int>(spec.outlier_frac * spec.m + 1e-9);
      for (int j = 0; j < k; ++j) {
        const auto idx = static_cast<std::size_t>(perm[static_cast<std::size_t>(j)]);
        inst.truth.e[static_cast<Index>(idx)] = spec.outlier_magnitude * rng.sign();
        (*inst.truth.outlier_mask)[idx] = true;
      }
      break;
    }
  }
  inst.y = inst.X * inst.truth.w_star + inst.truth.e;
  return inst;
}

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  bool has_header = false;
  bool normalize = false;  // standardize feature columns over the loaded rows
  bool add_bias = false;   // append a constant-1 column (one more +-1 weight)
};

struct Table {
  Matrix X;
  Vector y;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  const bool has_comma = line.find(',') != std::string::npos;
  if (has_comma) {
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
  } else {
    std::stringstream ss(line);
    while (ss >> cur) fields.push_back(cur);
  }
  return fields;
}

inline double parse_cell(const std::string& raw, const std::string& path, std::size_t row,
                         std::size_t col) {
  std::size_t a = raw.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    throw ParseError(path + ":" + std::to_string(row) + ":" + std::to_string(col) +
                     ": empty cell");
  std::size_t b = raw.find_last_not_of(" \t\r");
  const std::string s = raw.substr(a, b - a + 1);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(row) + ":" + std::to_string(col) +
                     ": non-numeric cell '" + s + "'");
  }
}

/// Columns with (population) std below this are left unscaled (constant/bias columns).
constexpr double kStdFloor = 1e-12;

}  // namespace detail

/// Standardize each column of X in place to mean 0, variance 1 (population
/// moments), skipping near-constant columns. Returns (means, stds) so test
/// data can be transformed with train statistics.
inline std::pair<Vector, Vector> standardize_columns(Matrix& X) {
  const Index m = X.rows(), n = X.cols();
  Vector mean(n), stddev(n);
  for (Index j = 0; j < n; ++j) {
    mean[j] = X.col(j).mean();
    const double var = (X.col(j).array() - mean[j]).square().sum() / double(m);
    stddev[j] = std::sqrt(var);
    if (stddev[j] > detail::kStdFloor)
      X.col(j) = (X.col(j).array() - mean[j]) / stddev[j];
  }
  return {mean, stddev};
}

inline void apply_standardization(Matrix& X, const Vector& mean, const Vector& stddev) {
  require(X.cols() == mean.size() && X.cols() == stddev.size(),
          "apply_standardization: size mismatch");
  for (Index j = 0; j < X.cols(); ++j)
    if (stddev[j] > detail::kStdFloor) X.col(j) = (X.col(j).array() - mean[j]) / stddev[j];
}

/// Parse a comma- or whitespace-delimited numeric table. The target column is
/// extracted as y; remaining columns, in file order, form X. normalize
/// standardizes the loaded feature columns over all loaded rows; pipelines
/// that split first should instead standardize with train statistics.
inline Table load_table(const std::string& path, int target_column,
                        const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t ncols = 0;
  bool header_skipped = !opts.has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (ncols == 0) ncols = fields.size();
    if (fields.size() != ncols)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ncols) + " columns, got " + std::to_string(fields.size()));
    std::vector<double> row(ncols);
    for (std::size_t j = 0; j < ncols; ++j)
      row[j] = detail::parse_cell(fields[j], path, lineno, j + 1);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  if (target_column < 0 || static_cast<std::size_t>(target_column) >= ncols)
    throw ParseError(path + ": target column " + std::to_string(target_column) +
                     " out of range (0.." + std::to_string(ncols - 1) + ")");

  const Index m = static_cast<Index>(rows.size());
  const Index n = static_cast<Index>(ncols) - 1;
  require(n >= 1, "load_table: need at least one feature column");
  Table t;
  t.X.resize(m, n);
  t.y.resize(m);
  for (Index i = 0; i < m; ++i) {
    Index jx = 0;
    for (std::size_t j = 0; j < ncols; ++j) {
      const double v = rows[static_cast<std::size_t>(i)][j];
      if (static_cast<int>(j) == target_column)
        t.y[i] = v;
      else
        t.X(i, jx++) = v;
    }
  }
  if (opts.normalize) standardize_columns(t.X);
  if (opts.add_bias) {
    t.X.conservativeResize(Eigen::NoChange, n + 1);
    t.X.col(n).setOnes();
  }
  return t;
}

/// Write X|y as comma-delimited text with 17 significant digits, so a
/// load_table round trip reproduces finite doubles bit-exactly. The target is
/// written as the last column.
inline void save_table(const std::string& path, const Matrix& X, const Vector& y) {
  require(X.rows() == y.size(), "save_table: row mismatch");
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  char buf[64];
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", X(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", y[i]);
    out << buf << '\n';
  }
}

struct Split {
  Matrix X_train;
  Vector y_train;
  Matrix X_test;
  Vector y_test;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::vector<int> corrupted_indices;  // positions within the train split
};

struct CorruptOptions {
  double magnitude_multiple = 10.0;  // outlier size = multiple * std(train targets)
};

/// Seeded shuffle split with outliers injected into train targets only:
/// floor(outlier_frac * m_train) indices get +- magnitude added, sign random.
/// Test targets are never touched.
inline Split split_and_corrupt(const Matrix& X, const Vector& y, double train_frac,
                               double outlier_frac, std::uint64_t seed,
                               const CorruptOptions& copts = {}) {
  require(X.rows() == y.size(), "split_and_corrupt: row mismatch");
  require(train_frac > 0.0 && train_frac < 1.0, "split_and_corrupt: train_frac in (0,1)");
  require(outlier_frac >= 0.0 && outlier_frac < 1.0, "split_and_corrupt: outlier_frac in [0,1)");
  const int m = static_cast<int>(X.rows());
  const int m_train = static_cast<int>(train_frac * m + 1e-9);
  require(m_train >= 1 && m_train < m, "split_and_corrupt: degenerate split");

  Rng rng(seed);
  const auto perm = rng.permutation(m);
  Split s;
  s.train_indices.assign(perm.begin(), perm.begin() + m_train);
  s.test_indices.assign(perm.begin() + m_train, perm.end());
  s.X_train.resize(m_train, X.cols());
  s.y_train.resize(m_train);
  s.X_test.resize(m - m_train, X.cols());
  s.y_test.resize(m - m_train);
  for (int i = 0; i < m_train; ++i) {
    s.X_train.row(i) = X.row(s.train_indices[static_cast<std::size_t>(i)]);
    s.y_train[i] = y[s.train_indices[static_cast<std::size_t>(i)]];
  }
  for (int i = 0; i < m - m_train; ++i) {
    s.X_test.row(i) = X.row(s.test_indices[static_cast<std::size_t>(i)]);
    s.y_test[i] = y[s.test_indices[static_cast<std::size_t>(i)]];
  }

  const int k = static_cast<int>(outlier_frac * m_train + 1e-9);
  if (k > 0) {
    const double mean = s.y_train.mean();
    const double stddev =
        std::sqrt((s.y_train.array() - mean).square().sum() / double(m_train));
    const double magnitude = copts.magnitude_multiple * stddev;
    const auto train_perm = rng.permutation(m_train);
    for (int j = 0; j < k; ++j) {
      const int idx = train_perm[static_cast<std::size_t>(j)];
      s.y_train[idx] += magnitude * rng.sign();
      s.corrupted_indices.push_back(idx);
    }
  }
  return s;
}

}  // namespace maximin
