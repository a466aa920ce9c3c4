#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchlab/matchlab.hpp"

namespace {

using namespace matchlab;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

/// Inline JSON when the argument starts with '{', otherwise a file path.
json load_json(const std::string& arg, const char* what) {
  std::string text = arg;
  if (arg.find_first_not_of(" \t\n") == std::string::npos || arg[arg.find_first_not_of(" \t\n")] != '{') {
    std::ifstream in(arg);
    if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + arg + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON in ") + what + ": " + e.what());
  }
}

std::vector<Point2> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open point file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("point file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x1,x2") throw InputError("point file '" + path + "' must start with the header x1,x2");
  std::vector<Point2> pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t used = 0;
      const double a = std::stod(line.substr(0, comma), &used);
      const std::string rest = line.substr(comma + 1);
      const double b = std::stod(rest, &used);
      if (rest.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("trailing text");
      pts.push_back({a, b});
    } catch (const std::logic_error&) {
      throw InputError(path + ":" + std::to_string(lineno) + ": expected two numbers");
    }
  }
  return pts;
}

void write_points_csv(std::ostream& os, const std::vector<Point2>& pts) {
  os << "x1,x2\n";
  char buf[64];
  for (auto p : pts) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x1, p.x2);
    os << buf;
  }
}

Rect parse_domain(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      v.push_back(std::stod(cell));
    } catch (const std::logic_error&) {
      throw ConfigError("--domain expects x0,y0,x1,y1");
    }
  }
  if (v.size() != 4 || !(v[2] > v[0]) || !(v[3] > v[1])) throw ConfigError("--domain expects x0,y0,x1,y1 with x0<x1, y0<y1");
  return {v[0], v[1], v[2], v[3]};
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("bounds config is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bounds config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown field '" + it.key() + "' in bounds config");
  }
}

// subcommands ----------------------------------------------------------------------------

struct MatchArgs {
  std::string x, y, domain;
  bool wb2 = false;
};

void cmd_match(const MatchArgs& a) {
  const auto xs = read_points_csv(a.x);
  const auto ys = read_points_csv(a.y);
  json out;
  if (a.wb2) {
    if (a.domain.empty()) throw ConfigError("--wb2 needs --domain");
    const double w = wb2_cost(std::span<const Point2>(xs), std::span<const Point2>(ys), parse_domain(a.domain));
    const double scale = static_cast<double>(std::max<std::size_t>(xs.size(), 1));
    out = {{"cost_sum", w * scale}, {"cost_w2sq", w}, {"n", xs.size()}, {"n_y", ys.size()}, {"kind", "wb2"}};
  } else {
    const auto r = assignment_solve(xs, ys);
    out = {{"cost_sum", r.cost_sum}, {"cost_w2sq", r.cost_w2sq}, {"n", r.n}};
  }
  print(out);
}

void cmd_bounds(const std::string& kind, const std::string& config) {
  const json cfg = load_json(config, "bounds config");
  json out;
  out["kind"] = kind;
  if (kind == "talagrand") {
    reject_unknown(cfg, {"density", "n"});
    const Density d = density_from_json(cfg.contains("density") ? cfg.at("density") : json());
    const double n = cfg.contains("n") ? field<double>(cfg, "n") : 0.0;
    out["value"] = talagrand_bound(d, n);
    out["metadata"] = {{"density", density_to_json(d)}, {"n", n}};
  } else if (kind == "cutoff" || kind == "cell-entropy") {
    reject_unknown(cfg, {"n", "alpha", "eps"});
    const double n = field<double>(cfg, "n");
    const double alpha = cfg.contains("alpha") ? field<double>(cfg, "alpha") : 1.5;
    const double eps = cfg.contains("eps") ? field<double>(cfg, "eps") : 0.5;
    if (kind == "cutoff") {
      out["value"] = cutoff_bound(n, alpha, eps);
      out["metadata"] = {{"n", n}, {"alpha", alpha}, {"eps", eps}};
    } else {
      const auto part = build_gaussian_partition(n, alpha, eps);
      const double v = cell_entropy_sum(part, n);
      out["value"] = v;
      out["metadata"] = {{"n", n},
                         {"alpha", alpha},
                         {"eps", eps},
                         {"cells", part.cells.size()},
                         {"ratio_to_pi_log2", v / (numerics::kPi * std::log(n) * std::log(n))}};
    }
  } else if (kind == "radial-bb") {
    reject_unknown(cfg, {"density", "counts"});
    const Density d = density_from_json(cfg.contains("density") ? cfg.at("density") : json());
    const auto* m = std::get_if<Multiscaling>(&d);
    if (!m) throw ConfigError("radial-bb needs a multiscaling density");
    AnnulusCounts counts;
    counts.counts = field<std::vector<std::int64_t>>(cfg, "counts");
    for (auto c : counts.counts) counts.total += c;
    out["value"] = radial_bb_bound(*m, counts);
    out["metadata"] = {{"density", density_to_json(d)}, {"counts", counts.counts}, {"n", counts.total}};
  } else {
    throw ConfigError("unknown bound kind '" + kind + "'");
  }
  print(out);
}

struct PartitionArgs {
  double n = 0.0;
  double alpha = 1.5;
  double eps = 0.5;
  bool maxwell = false;
  int m = 1;
  std::string cells;
};

void cmd_partition(const PartitionArgs& a) {
  const GridPartition p = a.maxwell ? build_maxwell_partition(a.n, a.alpha, a.m)
                                    : build_gaussian_partition(a.n, a.alpha, a.eps);
  json out = {{"kind", a.maxwell ? "maxwellian" : "gaussian"},
              {"n", a.n},
              {"alpha", a.alpha},
              {"r_n", p.r_n},
              {"side", p.side},
              {"k_min", p.k_min},
              {"k_max", p.k_max},
              {"cells", p.cells.size()},
              {"support_mass", p.support_mass},
              {"min_expected", p.min_expected},
              {"max_expected", p.max_expected},
              {"count_constant", p.count_constant}};
  if (a.maxwell) {
    out["m"] = a.m;
    out["r_tilde"] = p.r_tilde;
    out["r_tilde_fraction"] = {p.r_tilde_numerator, p.r_tilde_denominator};
  } else {
    out["eps"] = a.eps;
    out["distortion"] = p.distortion();
  }
  if (!a.cells.empty()) {
    std::ofstream f(a.cells);
    if (!f) throw ConfigError("cannot write '" + a.cells + "'");
    f << "j,k,lo1,lo2,hi1,hi2,mass,expected\n";
    char buf[256];
    for (const auto& c : p.cells) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.j, c.k, c.bounds.lo1,
                    c.bounds.lo2, c.bounds.hi1, c.bounds.hi2, c.mass, c.mass * p.n);
      f << buf;
    }
    out["cells_csv"] = a.cells;
  }
  print(out);
}

struct ExperimentArgs {
  std::string config;
  std::string output;
  std::string summary;
  std::size_t workers = 0;
};

void cmd_experiment(const ExperimentArgs& a) {
  ExperimentConfig cfg = experiment_config_from_json(load_json(a.config, "experiment config"));
  if (!a.output.empty()) cfg.output = a.output;
  if (!a.summary.empty()) cfg.summary = a.summary;
  if (a.workers) cfg.workers = a.workers;
  const auto records = run_experiment(cfg);
  const auto rows = summarize(records);
  std::optional<FitResult> fit;
  if (cfg.growth) {
    if (rows.size() >= 3) {
      fit = fit_leading(rows, *cfg.growth);
    } else {
      std::cerr << "matchlab: fewer than 3 values of n, skipping the fit\n";
    }
  }
  if (!cfg.output.empty()) {
    std::ofstream f(cfg.output);
    if (!f) throw ConfigError("cannot write '" + cfg.output + "'");
    write_records_csv(f, records);
  }
  const json summary = summary_json(cfg, rows, fit, utc_timestamp());
  if (!cfg.summary.empty()) {
    std::ofstream f(cfg.summary);
    if (!f) throw ConfigError("cannot write '" + cfg.summary + "'");
    f << summary.dump(2) << '\n';
  }
  print(summary);
}

struct PredictArgs {
  std::string density;
  std::vector<double> n;
  std::string mode = "bipartite";
};

void cmd_predict(const PredictArgs& a) {
  const Density d = density_from_json(load_json(a.density, "density"));
  PredictorMode mode;
  if (a.mode == "bipartite") {
    mode = PredictorMode::Bipartite;
  } else if (a.mode == "semidiscrete") {
    mode = PredictorMode::Semidiscrete;
  } else {
    throw ConfigError("unknown mode '" + a.mode + "'");
  }
  json rows = json::array();
  for (const auto& r : predictor_report(d, a.n, mode)) {
    json row = {{"n", r.n}, {"numeric", r.numeric}};
    row["closed_form"] = r.closed_form ? json(*r.closed_form) : json(nullptr);
    row["ratio"] = r.ratio ? json(*r.ratio) : json(nullptr);
    rows.push_back(row);
  }
  print({{"density", density_to_json(d)}, {"mode", a.mode}, {"rows", rows}});
}

struct SampleArgs {
  std::string density;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string output;
};

void cmd_sample(const SampleArgs& a) {
  const Density d = density_from_json(load_json(a.density, "density"));
  const auto cloud = sample(d, a.n, a.seed);
  if (a.output.empty()) {
    write_points_csv(std::cout, cloud.points);
  } else {
    std::ofstream f(a.output);
    if (!f) throw ConfigError("cannot write '" + a.output + "'");
    write_points_csv(f, cloud.points);
    print({{"n", cloud.n}, {"seed", cloud.seed}, {"density", json::parse(cloud.density_id)}, {"output", a.output}});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random Euclidean matching: exact costs, bounds and Monte Carlo experiments"};
  app.require_subcommand(1);

  MatchArgs match;
  auto* c_match = app.add_subcommand("match", "Optimal matching cost between two point files");
  c_match->add_option("--x", match.x, "CSV file with header x1,x2")->required();
  c_match->add_option("--y", match.y, "CSV file with header x1,x2")->required();
  c_match->add_flag("--wb2", match.wb2, "Boundary-relaxed cost instead of the matching cost");
  c_match->add_option("--domain", match.domain, "Rectangle x0,y0,x1,y1 for --wb2");

  std::string bound_kind, bound_config;
  auto* c_bounds = app.add_subcommand("bounds", "Evaluate an analytic transport bound");
  c_bounds->add_option("--kind", bound_kind, "talagrand | cutoff | radial-bb | cell-entropy")
      ->required()
      ->check(CLI::IsMember({"talagrand", "cutoff", "radial-bb", "cell-entropy"}));
  c_bounds->add_option("--config", bound_config, "JSON file or inline JSON object")->required();

  PartitionArgs part;
  auto* c_part = app.add_subcommand("partition", "Build the cut-off cell partition");
  c_part->add_option("--n", part.n, "Sample size")->required();
  c_part->add_option("--alpha", part.alpha, "Cut-off exponent in (1, 2)")->capture_default_str();
  c_part->add_option("--eps", part.eps, "Cell side times r_N (Gaussian kind)")->capture_default_str();
  c_part->add_flag("--maxwell", part.maxwell, "Maxwellian strip partition");
  c_part->add_option("--m", part.m, "Cells per unit of floor(r_N) (Maxwellian kind)")->capture_default_str();
  c_part->add_option("--cells", part.cells, "Write the cells to this CSV file");

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Run a Monte Carlo sweep");
  c_exp->add_option("--config", exp.config, "Experiment config JSON")->required();
  c_exp->add_option("--output", exp.output, "Override the records CSV path");
  c_exp->add_option("--summary", exp.summary, "Override the summary JSON path");
  c_exp->add_option("--workers", exp.workers, "Worker threads (0: all cores)");

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Tabulate the asymptotic cost predictors");
  c_pred->add_option("--density", pred.density, "Density JSON file or inline object")->required();
  c_pred->add_option("--n", pred.n, "Sample sizes")->required()->expected(1, -1);
  c_pred->add_option("--mode", pred.mode, "bipartite | semidiscrete")->capture_default_str();

  SampleArgs samp;
  auto* c_samp = app.add_subcommand("sample", "Draw a point cloud");
  c_samp->add_option("--density", samp.density, "Density JSON file or inline object")->required();
  c_samp->add_option("--n", samp.n, "Number of points")->required();
  c_samp->add_option("--seed", samp.seed, "Seed")->capture_default_str();
  c_samp->add_option("--output", samp.output, "CSV path (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (c_match->parsed()) cmd_match(match);
    if (c_bounds->parsed()) cmd_bounds(bound_kind, bound_config);
    if (c_part->parsed()) cmd_partition(part);
    if (c_exp->parsed()) cmd_experiment(exp);
    if (c_pred->parsed()) cmd_predict(pred);
    if (c_samp->parsed()) cmd_sample(samp);
  } catch (const ResourceError& e) {
    std::cerr << "matchlab: resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::bad_alloc&) {
    std::cerr << "matchlab: resource error: out of memory\n";
    return kExitResource;
  } catch (const InternalError& e) {
    std::cerr << "matchlab: internal error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "matchlab: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
