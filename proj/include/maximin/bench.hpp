#pragma once

#include "maximin/baselines.hpp"
#include "maximin/core.hpp"
#include "maximin/data.hpp"
#include "maximin/loss.hpp"
#include "maximin/solver.hpp"
#include "maximin/theory.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace maximin {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Flat key-value config text with [section] headers and '#' comments.
/// Keys are looked up as "section.key".
class ConfigMap {
 public:
  static ConfigMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
  }

  static ConfigMap parse_string(const std::string& text, const std::string& name = "<config>") {
    ConfigMap cfg;
    std::stringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(name + ":" + std::to_string(lineno) + ": malformed section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_key(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(key, values_.at(key)) : fallback;
  }

  long get_int(const std::string& key, long fallback) const {
    return has(key) ? to_int(key, values_.at(key)) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key " + key + ": expected boolean, got '" + v + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(require_key(key));
    std::string tok;
    while (ss >> tok) out.push_back(to_double(key, tok));
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(require_key(key));
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": expected number, got '" + v + "'");
    }
  }
  static long to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const long x = std::stol(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": expected integer, got '" + v + "'");
    }
  }
  std::map<std::string, std::string> values_;
};

/// One benchmark entry: an algorithm plus the loss it optimizes.
/// Tokens: maximin:<loss>, lr:<loss>, lpr:<loss>, ste:<loss>, sdr
/// where <loss> is squared | l1 | cross-entropy | huber:<delta>.
struct MethodSpec {
  std::string algo;
  LossKind loss = LossKind::squared;
  double huber_delta = 1.0;
  std::string loss_label = "squared";
  std::string token;

  static MethodSpec parse(const std::string& token) {
    MethodSpec ms;
    ms.token = token;
    std::vector<std::string> parts;
    std::stringstream ss(token);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.empty()) throw ConfigError("empty method token");
    ms.algo = parts[0];
    const bool known = ms.algo == "maximin" || ms.algo == "lr" || ms.algo == "lpr" ||
                       ms.algo == "ste" || ms.algo == "sdr";
    if (!known) throw ConfigError("unknown method '" + ms.algo + "' in token '" + token + "'");
    if (parts.size() == 1) {
      if (ms.algo != "sdr")
        throw ConfigError("method token '" + token + "' needs a loss, e.g. " + ms.algo +
                          ":squared");
      return ms;  // sdr defaults to squared
    }
    const std::string& loss = parts[1];
    if (loss == "squared") {
      ms.loss = LossKind::squared;
    } else if (loss == "l1") {
      ms.loss = LossKind::l1;
    } else if (loss == "cross-entropy" || loss == "xent") {
      ms.loss = LossKind::cross_entropy;
    } else if (loss == "huber") {
      ms.loss = LossKind::huber;
      if (parts.size() >= 3) {
        try {
          ms.huber_delta = std::stod(parts[2]);
        } catch (const std::exception&) {
          throw ConfigError("bad huber delta in token '" + token + "'");
        }
      }
      if (ms.huber_delta <= 0.0) throw ConfigError("huber delta must be > 0 in '" + token + "'");
    } else {
      throw ConfigError("unknown loss '" + loss + "' in token '" + token + "'");
    }
    ms.loss_label = loss == "xent" ? "cross-entropy" : loss;
    if (ms.loss == LossKind::huber)
      ms.loss_label = "huber:" + detail::format_double(ms.huber_delta);
    if (ms.algo == "sdr" && ms.loss != LossKind::squared)
      throw ConfigError("sdr supports only the squared loss");
    return ms;
  }
};

struct ExperimentConfig {
  // data
  bool synthetic = true;
  GeneratorSpec gen;  // sigma / outlier_frac overridden per sweep point
  std::string table_path;
  int target_column = 0;
  bool table_header = false;
  bool normalize = true;  // tabular: train-statistics standardization after the split
  bool add_bias = true;
  double train_frac = 0.7;
  double corrupt_magnitude = 10.0;  // multiples of train-target std

  // sweep
  std::string sweep_param;  // "sigma" or "outlier_frac"
  std::vector<double> sweep;

  // run
  std::vector<MethodSpec> methods;
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::string output = "results.csv";
  int threads = 0;  // 0 = hardware concurrency
  int trace_every = 0;
  std::string trace_output;

  // per-algorithm knobs
  SolveConfig solver;
  SteOptions ste_opts;
  SdrOptions sdr_opts;
  DescentOptions descent;
  InnerMinOptions inner;

  void validate() const {
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (sweep.empty()) throw ConfigError("sweep must contain at least one value");
    if (synthetic) {
      gen.validate();
    } else {
      if (table_path.empty()) throw ConfigError("table experiments need data.path");
      if (sweep_param != "outlier_frac")
        throw ConfigError("table experiments sweep outlier_frac");
    }
    try {
      solver.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

inline ExperimentConfig parse_experiment(const ConfigMap& cfg) {
  ExperimentConfig ec;
  const std::string source = cfg.get("data.source", "synthetic");
  if (source == "synthetic") {
    ec.synthetic = true;
    ec.gen.m = static_cast<int>(cfg.get_int("data.m", 0));
    ec.gen.n = static_cast<int>(cfg.get_int("data.n", 0));
    const std::string xs = cfg.get("data.x_scale", "inv-n");
    if (xs == "unit")
      ec.gen.x_scale = XScale::unit;
    else if (xs == "inv-n")
      ec.gen.x_scale = XScale::inv_n;
    else
      throw ConfigError("data.x_scale must be unit or inv-n");
    const std::string noise = cfg.get("data.noise", "gaussian");
    if (noise == "gaussian")
      ec.gen.noise = NoiseKind::gaussian;
    else if (noise == "laplace")
      ec.gen.noise = NoiseKind::laplace;
    else if (noise == "sparse-outliers")
      ec.gen.noise = NoiseKind::sparse_outliers;
    else
      throw ConfigError("data.noise must be gaussian, laplace or sparse-outliers");
    ec.gen.outlier_magnitude = cfg.get_double("data.outlier_magnitude", 1.0);
  } else if (source == "table") {
    ec.synthetic = false;
    ec.table_path = cfg.require_key("data.path");
    ec.target_column = static_cast<int>(cfg.get_int("data.target", 0));
    ec.table_header = cfg.get_bool("data.header", false);
    ec.normalize = cfg.get_bool("data.normalize", true);
    ec.add_bias = cfg.get_bool("data.add_bias", true);
    ec.train_frac = cfg.get_double("data.train_frac", 0.7);
    ec.corrupt_magnitude = cfg.get_double("run.corrupt_magnitude", 10.0);
  } else {
    throw ConfigError("data.source must be synthetic or table");
  }

  const bool has_sigma = cfg.has("sweep.sigma");
  const bool has_frac = cfg.has("sweep.outlier_frac");
  if (has_sigma == has_frac)
    throw ConfigError("exactly one of sweep.sigma / sweep.outlier_frac is required");
  ec.sweep_param = has_sigma ? "sigma" : "outlier_frac";
  ec.sweep = cfg.get_double_list("sweep." + ec.sweep_param);

  for (const auto& tok : cfg.get_string_list("run.methods"))
    ec.methods.push_back(MethodSpec::parse(tok));
  ec.repetitions = static_cast<int>(cfg.get_int("run.repetitions", 1));
  ec.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 0));
  ec.output = cfg.get("run.output", "results.csv");
  ec.threads = static_cast<int>(cfg.get_int("run.threads", 0));
  ec.trace_every = static_cast<int>(cfg.get_int("run.trace_every", 0));
  ec.trace_output = cfg.get("run.trace_output", "");

  ec.solver.method = method_from_string(cfg.get("solver.method", "gda-alternating"));
  ec.solver.eta = cfg.get_double("solver.eta", ec.solver.eta);
  ec.solver.gamma0 = cfg.get_double("solver.gamma0", ec.solver.gamma0);
  ec.solver.gamma_growth = cfg.get_double("solver.gamma_growth", ec.solver.gamma_growth);
  ec.solver.adaptive = cfg.get_bool("solver.adaptive", ec.solver.adaptive);
  ec.solver.adam_beta1 = cfg.get_double("solver.adam_beta1", ec.solver.adam_beta1);
  ec.solver.adam_beta2 = cfg.get_double("solver.adam_beta2", ec.solver.adam_beta2);
  ec.solver.adam_eps = cfg.get_double("solver.adam_eps", ec.solver.adam_eps);
  ec.solver.max_iters = static_cast<int>(cfg.get_int("solver.max_iters", ec.solver.max_iters));
  ec.solver.binarize_tol = cfg.get_double("solver.binarize_tol", ec.solver.binarize_tol);
  ec.solver.grad_tol = cfg.get_double("solver.grad_tol", ec.solver.grad_tol);
  ec.solver.divergence_cap = cfg.get_double("solver.divergence_cap", ec.solver.divergence_cap);

  ec.ste_opts.steps = static_cast<int>(cfg.get_int("ste.steps", ec.ste_opts.steps));
  ec.ste_opts.step_size = cfg.get_double("ste.step_size", ec.ste_opts.step_size);
  ec.ste_opts.latent_clip = cfg.get_double("ste.latent_clip", ec.ste_opts.latent_clip);

  ec.sdr_opts.rank = static_cast<int>(cfg.get_int("sdr.rank", ec.sdr_opts.rank));
  ec.sdr_opts.restarts = static_cast<int>(cfg.get_int("sdr.restarts", ec.sdr_opts.restarts));
  ec.sdr_opts.max_iters = static_cast<int>(cfg.get_int("sdr.max_iters", ec.sdr_opts.max_iters));

  ec.descent.max_iters = static_cast<int>(cfg.get_int("descent.max_iters", ec.descent.max_iters));
  ec.descent.grad_tol = cfg.get_double("descent.grad_tol", ec.descent.grad_tol);
  ec.descent.step_tol = cfg.get_double("descent.step_tol", ec.descent.step_tol);

  ec.validate();
  return ec;
}

inline ExperimentConfig parse_experiment_file(const std::string& path) {
  return parse_experiment(ConfigMap::parse_file(path));
}

struct MetricRow {
  std::string method;
  std::string loss;
  std::string sweep_param;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  bool has_seed = true;
  bool aggregate = false;
  double hamming = std::numeric_limits<double>::quiet_NaN();
  double hamming_std = std::numeric_limits<double>::quiet_NaN();
  double nrmse = std::numeric_limits<double>::quiet_NaN();
  double nrmse_std = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = std::numeric_limits<double>::quiet_NaN();
  double converged = 0.0;  // 0/1 per run; fraction converged on aggregate rows
};

inline const char* results_csv_header() {
  return "method,loss,sweep_param,sweep_value,seed,aggregate,hamming_error,hamming_std,nrmse,"
         "nrmse_std,wall_time_ms,converged";
}

inline void write_results_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  auto cell = [](double v) { return std::isnan(v) ? std::string() : detail::format_double(v); };
  out << results_csv_header() << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.loss << ',' << r.sweep_param << ','
        << detail::format_double(r.sweep_value) << ',';
    if (r.has_seed) out << r.seed;
    out << ',' << (r.aggregate ? 1 : 0) << ',' << cell(r.hamming) << ',' << cell(r.hamming_std)
        << ',' << cell(r.nrmse) << ',' << cell(r.nrmse_std) << ',' << cell(r.wall_ms) << ','
        << detail::format_double(r.converged) << '\n';
  }
}

inline void write_results_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open output file");
  write_results_csv(out, rows);
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
  if (trace.empty()) throw ConfigError("write_trace_csv: empty trace");
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open trace output file");
  const Index n = trace.front().w.size();
  out << "iter,lagrangian";
  for (Index i = 0; i < n; ++i) out << ",w" << i;
  for (Index i = 0; i < n; ++i) out << ",z" << i;
  out << '\n';
  for (const auto& t : trace) {
    out << t.iter << ',' << detail::format_double(t.lagrangian);
    for (Index i = 0; i < n; ++i) out << ',' << detail::format_double(t.w[i]);
    for (Index i = 0; i < n; ++i) out << ',' << detail::format_double(t.z[i]);
    out << '\n';
  }
}

inline std::vector<TraceEntry> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open trace file");
  std::string header;
  if (!std::getline(in, header)) throw ConfigError(path + ": empty trace file");
  std::size_t ncols = 1 + static_cast<std::size_t>(std::count(header.begin(), header.end(), ','));
  if (ncols < 4 || (ncols - 2) % 2 != 0)
    throw ConfigError(path + ": malformed trace header");
  const Index n = static_cast<Index>((ncols - 2) / 2);
  std::vector<TraceEntry> trace;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::strtod(tok.c_str(), nullptr));
    if (vals.size() != ncols)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad trace row");
    TraceEntry e;
    e.iter = static_cast<int>(vals[0]);
    e.lagrangian = vals[1];
    e.w.resize(n);
    e.z.resize(n);
    for (Index i = 0; i < n; ++i) {
      e.w[i] = vals[2 + static_cast<std::size_t>(i)];
      e.z[i] = vals[2 + static_cast<std::size_t>(n + i)];
    }
    trace.push_back(std::move(e));
  }
  if (trace.empty()) throw ConfigError(path + ": trace has no rows");
  return trace;
}

/// Per-iteration histogram of weight values over [-2, 2]; out-of-range values
/// land in the edge bins so every row sums to n.
inline std::vector<std::vector<long>> trace_weight_histogram(const std::vector<TraceEntry>& trace,
                                                             int bins) {
  if (trace.empty()) throw std::invalid_argument("trace_weight_histogram: empty trace");
  require(bins >= 1, "trace_weight_histogram: bins must be >= 1");
  std::vector<std::vector<long>> rows;
  rows.reserve(trace.size());
  const double lo = -2.0, hi = 2.0;
  for (const auto& t : trace) {
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (Index i = 0; i < t.w.size(); ++i) {
      int b = static_cast<int>(std::floor((t.w[i] - lo) / (hi - lo) * bins));
      b = std::clamp(b, 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    rows.push_back(std::move(counts));
  }
  return rows;
}

inline void write_histogram_csv(const std::string& path, const std::vector<TraceEntry>& trace,
                                int bins) {
  const auto hist = trace_weight_histogram(trace, bins);
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open histogram output file");
  out << "iter";
  for (int b = 0; b < bins; ++b) out << ",bin" << b;
  out << '\n';
  for (std::size_t r = 0; r < hist.size(); ++r) {
    out << trace[r].iter;
    for (long c : hist[r]) out << ',' << c;
    out << '\n';
  }
}

namespace detail {

struct RunOutcome {
  double hamming = std::numeric_limits<double>::quiet_NaN();
  double nrmse = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::optional<std::vector<TraceEntry>> trace;
};

/// Runs one (method, sweep point, repetition) cell. Synthetic instances are
/// shared across methods at the same (sweep, rep); only the algorithm seed
/// differs per method.
inline RunOutcome execute_run(const ExperimentConfig& ec, const Table* table, int method_idx,
                              int sweep_idx, int rep, bool want_trace) {
  const MethodSpec& ms = ec.methods[static_cast<std::size_t>(method_idx)];
  const std::uint64_t inst_seed =
      mix_seed(mix_seed(ec.seed, static_cast<std::uint64_t>(sweep_idx)),
               static_cast<std::uint64_t>(rep));
  const std::uint64_t algo_seed =
      mix_seed(inst_seed, 0x1000 + static_cast<std::uint64_t>(method_idx));
  const double sweep_value = ec.sweep[static_cast<std::size_t>(sweep_idx)];

  Matrix X_fit;
  Vector y_fit;
  Matrix X_eval;
  Vector y_eval;
  std::optional<Vector> w_star;

  if (ec.synthetic) {
    GeneratorSpec gs = ec.gen;
    gs.seed = inst_seed;
    if (ec.sweep_param == "sigma")
      gs.sigma = sweep_value;
    else
      gs.outlier_frac = sweep_value;
    Instance inst = generate(gs);
    w_star = inst.truth.w_star;
    X_fit = std::move(inst.X);
    y_fit = std::move(inst.y);
    // held-out evaluation data: same design distribution, noiseless targets
    Rng test_rng(mix_seed(inst_seed, 9999));
    const double xs = gs.x_scale == XScale::unit ? 1.0 : 1.0 / std::sqrt(double(gs.n));
    X_eval = test_rng.normal_matrix(gs.m, gs.n, xs);
    y_eval = X_eval * (*w_star);
  } else {
    Split split = split_and_corrupt(table->X, table->y, ec.train_frac, sweep_value, inst_seed,
                                    {ec.corrupt_magnitude});
    if (ec.normalize) {
      const auto [mean, stddev] = standardize_columns(split.X_train);
      apply_standardization(split.X_test, mean, stddev);
    }
    X_fit = std::move(split.X_train);
    y_fit = std::move(split.y_train);
    X_eval = std::move(split.X_test);
    y_eval = std::move(split.y_test);
  }

  const LossModel model = LossModel::make(ms.loss, X_fit, y_fit, ms.huber_delta);

  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Vector w_binary;
  try {
    if (ms.algo == "maximin") {
      SolveConfig sc = ec.solver;
      sc.seed = algo_seed;
      sc.trace_every = want_trace ? std::max(1, ec.trace_every) : 0;
      try {
        SolveResult res = solve(model, sc);
        w_binary = res.w_binary;
        out.converged = res.converged;
        out.trace = std::move(res.trace);
      } catch (const DivergedError& e) {
        w_binary = e.last.w_binary;
        out.converged = false;
        out.trace = e.last.trace;
      }
    } else if (ms.algo == "lr") {
      BaselineResult res = lr_round(model, ec.descent);
      w_binary = res.w_binary;
      out.converged = res.converged;
    } else if (ms.algo == "lpr") {
      BaselineResult res = lpr(model, ec.descent);
      w_binary = res.w_binary;
      out.converged = res.converged;
    } else if (ms.algo == "ste") {
      SteOptions so = ec.ste_opts;
      so.seed = algo_seed;
      BaselineResult res = ste(model, so);
      w_binary = res.w_binary;
      out.converged = res.converged;
    } else {  // sdr
      SdrOptions so = ec.sdr_opts;
      so.seed = algo_seed;
      BaselineResult res = sdr(model, so);
      w_binary = res.w_binary;
      out.converged = res.converged;
    }
  } catch (const std::exception&) {
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    out.converged = false;
    return out;  // failed run: metrics stay empty, sweep continues
  }
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  if (w_star.has_value()) out.hamming = hamming_error(*w_star, w_binary);
  if (y_eval.norm() > 0.0) out.nrmse = nrmse(y_eval, Vector(X_eval * w_binary));
  return out;
}

}  // namespace detail

/// Deterministic sweep execution: every (method, sweep value, repetition)
/// yields one row, followed by an aggregate row per (method, sweep value).
/// Row content is independent of thread count; wall_time_ms is the only
/// non-reproducible column.
inline std::vector<MetricRow> run_experiment(const ExperimentConfig& ec,
                                             std::vector<TraceEntry>* trace_out = nullptr) {
  ec.validate();
  std::optional<Table> table;
  if (!ec.synthetic)
    table = load_table(ec.table_path, ec.target_column,
                       {ec.table_header, /*normalize=*/false, ec.add_bias});

  const int n_methods = static_cast<int>(ec.methods.size());
  const int n_sweep = static_cast<int>(ec.sweep.size());
  const int reps = ec.repetitions;
  const int total = n_methods * n_sweep * reps;

  // the traced run: first maximin method, first sweep point, first repetition
  int trace_run = -1;
  if (ec.trace_every > 0) {
    for (int mi = 0; mi < n_methods; ++mi) {
      if (ec.methods[static_cast<std::size_t>(mi)].algo == "maximin") {
        trace_run = (mi * n_sweep + 0) * reps + 0;
        break;
      }
    }
  }

  std::vector<detail::RunOutcome> outcomes(static_cast<std::size_t>(total));
  auto worker_body = [&](int run_idx) {
    const int mi = run_idx / (n_sweep * reps);
    const int si = (run_idx / reps) % n_sweep;
    const int rep = run_idx % reps;
    outcomes[static_cast<std::size_t>(run_idx)] = detail::execute_run(
        ec, table ? &*table : nullptr, mi, si, rep, run_idx == trace_run);
  };

  int threads = ec.threads > 0 ? ec.threads
                               : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, total));
  if (threads == 1) {
    for (int i = 0; i < total; ++i) worker_body(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) worker_body(i);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<MetricRow> rows;
  rows.reserve(static_cast<std::size_t>(total) + static_cast<std::size_t>(n_methods * n_sweep));
  for (int mi = 0; mi < n_methods; ++mi) {
    const MethodSpec& ms = ec.methods[static_cast<std::size_t>(mi)];
    for (int si = 0; si < n_sweep; ++si) {
      double ham_sum = 0, ham_sq = 0, nr_sum = 0, nr_sq = 0, wall_sum = 0, conv_sum = 0;
      int ham_n = 0, nr_n = 0;
      for (int rep = 0; rep < reps; ++rep) {
        const auto& oc = outcomes[static_cast<std::size_t>((mi * n_sweep + si) * reps + rep)];
        MetricRow r;
        r.method = ms.algo;
        r.loss = ms.loss_label;
        r.sweep_param = ec.sweep_param;
        r.sweep_value = ec.sweep[static_cast<std::size_t>(si)];
        r.seed = mix_seed(mix_seed(ec.seed, static_cast<std::uint64_t>(si)),
                          static_cast<std::uint64_t>(rep));
        r.hamming = oc.hamming;
        r.nrmse = oc.nrmse;
        r.wall_ms = oc.wall_ms;
        r.converged = oc.converged ? 1.0 : 0.0;
        rows.push_back(r);
        if (!std::isnan(oc.hamming)) {
          ham_sum += oc.hamming;
          ham_sq += oc.hamming * oc.hamming;
          ++ham_n;
        }
        if (!std::isnan(oc.nrmse)) {
          nr_sum += oc.nrmse;
          nr_sq += oc.nrmse * oc.nrmse;
          ++nr_n;
        }
        if (!std::isnan(oc.wall_ms)) wall_sum += oc.wall_ms;
        conv_sum += oc.converged ? 1.0 : 0.0;
      }
      MetricRow agg;
      agg.method = ms.algo;
      agg.loss = ms.loss_label;
      agg.sweep_param = ec.sweep_param;
      agg.sweep_value = ec.sweep[static_cast<std::size_t>(si)];
      agg.has_seed = false;
      agg.aggregate = true;
      auto finish = [](double sum, double sq, int n, double& mean, double& stddev) {
        if (n == 0) return;
        mean = sum / n;
        const double var = std::max(0.0, sq / n - mean * mean);
        stddev = n > 1 ? std::sqrt(var * n / (n - 1)) : 0.0;
      };
      finish(ham_sum, ham_sq, ham_n, agg.hamming, agg.hamming_std);
      finish(nr_sum, nr_sq, nr_n, agg.nrmse, agg.nrmse_std);
      agg.wall_ms = wall_sum / reps;
      agg.converged = conv_sum / reps;
      rows.push_back(agg);
    }
  }

  if (trace_run >= 0 && trace_out != nullptr) {
    const auto& oc = outcomes[static_cast<std::size_t>(trace_run)];
    if (oc.trace.has_value()) *trace_out = *oc.trace;
  }
  return rows;
}

}  // namespace maximin
