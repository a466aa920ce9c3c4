#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchlab/core.hpp"
#include "matchlab/densities.hpp"
#include "matchlab/random.hpp"
#include "matchlab/transport.hpp"

namespace matchlab {

enum class Mode { Bipartite, Semidiscrete };

inline const char* mode_name(Mode m) { return m == Mode::Bipartite ? "bipartite" : "semidiscrete"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "bipartite") return Mode::Bipartite;
  if (s == "semidiscrete") return Mode::Semidiscrete;
  throw ConfigError("unknown mode '" + s + "' (expected bipartite or semidiscrete)");
}

enum class Growth { Log, Log32, Log2 };

inline const char* growth_name(Growth g) {
  switch (g) {
    case Growth::Log: return "log";
    case Growth::Log32: return "log^1.5";
    case Growth::Log2: return "log^2";
  }
  return "log";
}

inline Growth parse_growth(const std::string& s) {
  if (s == "log") return Growth::Log;
  if (s == "log^1.5") return Growth::Log32;
  if (s == "log^2") return Growth::Log2;
  throw ConfigError("unknown growth law '" + s + "' (expected log, log^1.5 or log^2)");
}

inline double growth_value(Growth g, double n) {
  const double l = std::log(n);
  switch (g) {
    case Growth::Log: return l;
    case Growth::Log32: return l * std::sqrt(l);
    case Growth::Log2: return l * l;
  }
  return l;
}

/// Trials per n when the config leaves them unset: max(30, 2^15 / n).
inline std::size_t default_trials(std::size_t n) {
  return std::max<std::size_t>(30, n == 0 ? 30 : (std::size_t{1} << 15) / n);
}

struct ExperimentConfig {
  Density density = UniformSquare{};
  std::vector<std::size_t> n_values;
  std::optional<std::size_t> trials;  // unset: default_trials(n)
  Mode mode = Mode::Bipartite;
  std::size_t resolution = 32;
  std::uint64_t seed = 0;
  std::string output;   // CSV path, empty for none
  std::string summary;  // JSON path, empty for none
  std::optional<Growth> growth;
  std::size_t workers = 0;  // 0: hardware concurrency

  std::size_t trials_for(std::size_t n) const { return trials ? *trials : default_trials(n); }
};

inline void validate(const ExperimentConfig& cfg) {
  validate(cfg.density);
  if (cfg.n_values.empty()) throw ConfigError("experiment: n_values must not be empty");
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    if (cfg.n_values[i] < 1) throw ConfigError("experiment: n_values must be >= 1");
    if (i > 0 && !(cfg.n_values[i] > cfg.n_values[i - 1])) {
      throw ConfigError("experiment: n_values must be strictly increasing");
    }
  }
  if (cfg.trials && *cfg.trials < 1) throw ConfigError("experiment: trials must be >= 1");
  if (cfg.mode == Mode::Semidiscrete && cfg.resolution < 8) {
    throw ConfigError("experiment: resolution must be >= 8");
  }
}

struct ExperimentRecord {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Mode mode = Mode::Bipartite;
  double cost_sum = 0.0;   // C_N
  double cost_w2sq = 0.0;  // C_N / n
  double wall_ms = 0.0;
};

namespace detail {
[[noreturn]] inline void rethrow_with_context(const std::string& ctx) {
  try {
    throw;
  } catch (const ResourceError& e) {
    throw ResourceError(ctx + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const InputError& e) {
    throw InputError(ctx + e.what());
  } catch (const InternalError& e) {
    throw InternalError(ctx + e.what());
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }
}
}  // namespace detail

/// One trial: samples from the record seed, solves, times the solve.
inline ExperimentRecord run_trial(const ExperimentConfig& cfg, std::size_t n, std::size_t trial) {
  ExperimentRecord r;
  r.n = n;
  r.trial = trial;
  r.mode = cfg.mode;
  r.seed = record_seed(cfg.seed, n, trial);
  const auto t0 = std::chrono::steady_clock::now();
  const PointCloud x = sample(cfg.density, n, child_seed(r.seed, 0));
  if (cfg.mode == Mode::Bipartite) {
    const PointCloud y = sample(cfg.density, n, child_seed(r.seed, 1));
    r.cost_sum = assignment_cost(x, y).cost_sum;
    r.cost_w2sq = r.cost_sum / static_cast<double>(n);
  } else {
    r.cost_w2sq = semidiscrete_estimate(x, cfg.density, cfg.resolution);
    r.cost_sum = r.cost_w2sq * static_cast<double>(n);
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// All (n, trial) pairs, ordered by n then trial. Each record depends only on
/// the master seed, n and the trial index, so worker count and scheduling
/// do not change the results.
inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t n : cfg.n_values) {
    for (std::size_t t = 0; t < cfg.trials_for(n); ++t) jobs.push_back({n, t});
  }
  std::vector<ExperimentRecord> out(jobs.size());
  std::size_t workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        try {
          out[i] = run_trial(cfg, jobs[i].first, jobs[i].second);
        } catch (const Error&) {
          std::ostringstream ctx;
          ctx << "n=" << jobs[i].first << " trial=" << jobs[i].second << ": ";
          detail::rethrow_with_context(ctx.str());
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Statistics -----------------------------------------------------------------------------

struct SummaryRow {
  std::size_t n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;  // 0 for a single trial
  std::size_t trials = 0;
};

/// Per-n sample mean and standard error of cost_sum, ordered by n.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  if (records.empty()) throw InputError("summarize: no records");
  std::vector<std::size_t> ns;
  for (const auto& r : records) ns.push_back(r.n);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<SummaryRow> rows;
  for (std::size_t n : ns) {
    std::vector<double> v;
    for (const auto& r : records) {
      if (r.n == n) v.push_back(r.cost_sum);
    }
    SummaryRow row;
    row.n = n;
    row.trials = v.size();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    row.mean = mean;
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      row.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

struct FitResult {
  double a = 0.0;  // slope on g(n)
  double b = 0.0;  // intercept
  double se_a = 0.0;
  double se_b = 0.0;
  double residual_norm = 0.0;
  Growth growth = Growth::Log;
};

/// Ordinary least squares of mean cost_sum on (g(n), 1) with classical
/// standard errors.
inline FitResult fit_leading(const std::vector<SummaryRow>& summary, Growth g) {
  std::vector<double> xs, ys;
  for (const auto& r : summary) {
    xs.push_back(growth_value(g, static_cast<double>(r.n)));
    ys.push_back(r.mean);
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw FitError("fit_leading: need at least 3 distinct n");
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("fit_leading: design matrix is rank deficient");
  FitResult f;
  f.growth = g;
  f.a = sxy / sxx;
  f.b = my - f.a * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.a * xs[i] + f.b);
    rss += e * e;
  }
  f.residual_norm = std::sqrt(rss);
  const double sigma2 = rss / (k - 2.0);
  f.se_a = std::sqrt(sigma2 / sxx);
  f.se_b = std::sqrt(sigma2 * (1.0 / k + mx * mx / sxx));
  return f;
}

struct PredictorRow {
  double n = 0.0;
  double numeric = 0.0;
  std::optional<double> closed_form;  // absent for families without one
  std::optional<double> ratio;        // numeric / closed_form
};

inline std::vector<PredictorRow> predictor_report(const Density& d, const std::vector<double>& n_values,
                                                  PredictorMode mode) {
  std::vector<PredictorRow> rows;
  for (double n : n_values) {
    PredictorRow r;
    r.n = n;
    r.numeric = predictor_numeric(d, n, mode);
    try {
      r.closed_form = predictor_closed_form(d, n, mode);
      r.ratio = r.numeric / *r.closed_form;
    } catch (const UnsupportedError&) {
    }
    rows.push_back(r);
  }
  return rows;
}

// Persistence ------------------------------------------------------------------------------

namespace detail {
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

inline constexpr const char* kCsvHeader = "n,trial,seed,mode,cost_sum,cost_w2sq,wall_ms";

inline void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.n << ',' << r.trial << ',' << r.seed << ',' << mode_name(r.mode) << ','
       << detail::format_double(r.cost_sum) << ',' << detail::format_double(r.cost_w2sq) << ','
       << detail::format_double(r.wall_ms) << '\n';
  }
}

inline std::vector<ExperimentRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw InputError("records CSV: unexpected header");
  std::vector<ExperimentRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw InputError("records CSV: line " + std::to_string(lineno) + " needs 7 fields");
    try {
      ExperimentRecord r;
      r.n = std::stoull(f[0]);
      r.trial = std::stoull(f[1]);
      r.seed = std::stoull(f[2]);
      r.mode = parse_mode(f[3]);
      r.cost_sum = std::stod(f[4]);
      r.cost_w2sq = std::stod(f[5]);
      r.wall_ms = std::stod(f[6]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw InputError("records CSV: malformed number on line " + std::to_string(lineno));
    }
  }
  return out;
}

/// Summary document. The timestamp sits alone under "metadata" so two runs
/// of the same config differ only there.
inline nlohmann::json summary_json(const ExperimentConfig& cfg, const std::vector<SummaryRow>& rows,
                                   const std::optional<FitResult>& fit, const std::string& timestamp) {
  nlohmann::json j;
  j["metadata"] = {{"timestamp", timestamp}};
  j["density"] = density_to_json(cfg.density);
  j["mode"] = mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  nlohmann::json per_n = nlohmann::json::object();
  for (const auto& r : rows) {
    per_n[std::to_string(r.n)] = {{"mean", r.mean}, {"stderr", r.stderr_}, {"trials", r.trials}};
  }
  j["per_n"] = per_n;
  if (fit) {
    j["fit"] = {{"a", fit->a},       {"b", fit->b}, {"se_a", fit->se_a}, {"se_b", fit->se_b},
                {"g", growth_name(fit->growth)}, {"residual_norm", fit->residual_norm}};
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Config JSON ------------------------------------------------------------------------------

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  static const char* const allowed[] = {"density", "n_values", "trials",  "mode",   "resolution",
                                        "seed",    "output",   "summary", "growth", "workers"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown field '" + it.key() + "' in experiment config");
  }
  ExperimentConfig cfg;
  try {
    if (!j.contains("density")) throw ConfigError("experiment config is missing 'density'");
    if (!j.contains("n_values")) throw ConfigError("experiment config is missing 'n_values'");
    cfg.density = density_from_json(j.at("density"));
    for (const auto& v : j.at("n_values")) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw ConfigError("n_values must be positive integers");
      cfg.n_values.push_back(v.get<std::size_t>());
    }
    if (j.contains("trials") && !j.at("trials").is_null()) {
      if (!j.at("trials").is_number_integer() || j.at("trials").get<std::int64_t>() < 1) {
        throw ConfigError("trials must be a positive integer");
      }
      cfg.trials = j.at("trials").get<std::size_t>();
    }
    if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("resolution")) cfg.resolution = j.at("resolution").get<std::size_t>();
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_integer()) throw ConfigError("seed must be an integer");
      cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("summary")) cfg.summary = j.at("summary").get<std::string>();
    if (j.contains("growth")) cfg.growth = parse_growth(j.at("growth").get<std::string>());
    if (j.contains("workers")) cfg.workers = j.at("workers").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["density"] = density_to_json(cfg.density);
  j["n_values"] = cfg.n_values;
  if (cfg.trials) j["trials"] = *cfg.trials;
  j["mode"] = mode_name(cfg.mode);
  j["resolution"] = cfg.resolution;
  j["seed"] = cfg.seed;
  if (!cfg.output.empty()) j["output"] = cfg.output;
  if (!cfg.summary.empty()) j["summary"] = cfg.summary;
  if (cfg.growth) j["growth"] = growth_name(*cfg.growth);
  if (cfg.workers) j["workers"] = cfg.workers;
  return j;
}

}  // namespace matchlab
