#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "matchlab/harness.hpp"

using namespace matchlab;

namespace {
ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.density = UniformSquare{1.0};
  cfg.n_values = {8, 16, 32};
  cfg.trials = 4;
  cfg.seed = 12345;
  cfg.workers = 1;
  return cfg;
}

std::vector<SummaryRow> synthetic(Growth g, double a, double b) {
  std::vector<SummaryRow> rows;
  for (std::size_t n : {64u, 128u, 256u, 512u, 1024u, 2048u, 4096u, 8192u, 16384u, 32768u}) {
    rows.push_back({n, a * growth_value(g, static_cast<double>(n)) + b, 0.0, 1});
  }
  return rows;
}
}  // namespace

TEST(Experiment, RerunIsBitIdentical) {
  ExperimentConfig cfg = small_config();
  cfg.n_values = {2};
  cfg.trials = 1;
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].seed, b[0].seed);
  EXPECT_EQ(a[0].cost_sum, b[0].cost_sum);
  EXPECT_EQ(a[0].seed, record_seed(12345, 2, 0));
}

TEST(Experiment, IndependentOfWorkerCountAndSchedule) {
  ExperimentConfig cfg = small_config();
  const auto seq = run_experiment(cfg);
  cfg.workers = 4;
  const auto par = run_experiment(cfg);
  ASSERT_EQ(seq.size(), par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(seq[i].n, par[i].n);
    EXPECT_EQ(seq[i].trial, par[i].trial);
    EXPECT_EQ(seq[i].cost_sum, par[i].cost_sum);
  }
  // running single trials in reverse order reproduces each record
  for (std::size_t i = seq.size(); i-- > 0;) {
    EXPECT_EQ(run_trial(cfg, seq[i].n, seq[i].trial).cost_sum, seq[i].cost_sum);
  }
}

TEST(Experiment, RecordsAreConsistent) {
  ExperimentConfig cfg = small_config();
  for (Mode m : {Mode::Bipartite, Mode::Semidiscrete}) {
    cfg.mode = m;
    cfg.resolution = 8;
    for (const auto& r : run_experiment(cfg)) {
      EXPECT_NEAR(r.cost_w2sq * r.n, r.cost_sum, 1e-12 * r.cost_sum);
      EXPECT_GE(r.wall_ms, 0.0);
      EXPECT_EQ(r.mode, m);
    }
  }
}

TEST(Experiment, DefaultTrialCounts) {
  EXPECT_EQ(default_trials(128), 256u);
  EXPECT_EQ(default_trials(1024), 32u);
  EXPECT_EQ(default_trials(4096), 30u);
  ExperimentConfig cfg = small_config();
  cfg.trials.reset();
  EXPECT_EQ(cfg.trials_for(8), 4096u);
}

TEST(Experiment, ValidationErrors) {
  ExperimentConfig cfg = small_config();
  cfg.n_values = {16, 8};
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_config();
  cfg.trials = 0;
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_config();
  cfg.mode = Mode::Semidiscrete;
  cfg.resolution = 4;
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_config();
  cfg.n_values.clear();
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Experiment, ResourceErrorsCarryTrialContext) {
  ExperimentConfig cfg = small_config();
  cfg.mode = Mode::Semidiscrete;
  cfg.resolution = 1024;
  try {
    run_experiment(cfg);
    FAIL() << "expected a resource error";
  } catch (const ResourceError& e) {
    EXPECT_NE(std::string(e.what()).find("n=8 trial=0"), std::string::npos);
  }
}

TEST(Experiment, SemidiscreteResolutionsAgreeWithinBias) {
  ExperimentConfig cfg = small_config();
  cfg.mode = Mode::Semidiscrete;
  cfg.n_values = {64};
  cfg.trials = 5;
  cfg.resolution = 32;
  const auto a = summarize(run_experiment(cfg));
  cfg.resolution = 64;
  const auto b = summarize(run_experiment(cfg));
  const double h = 1.0 / 32.0;
  EXPECT_LT(std::abs(a[0].mean - b[0].mean) / 64.0, 4.0 * h * h);
}

TEST(Summarize, Examples) {
  ExperimentRecord r;
  r.n = 10;
  r.cost_sum = 3.5;
  auto one = summarize({r});
  EXPECT_EQ(one[0].mean, 3.5);
  EXPECT_EQ(one[0].stderr_, 0.0);
  EXPECT_EQ(one[0].trials, 1u);
  ExperimentRecord s = r;
  s.cost_sum = 4.5;
  EXPECT_EQ(summarize({r, s})[0].mean, 4.0);
  EXPECT_THROW(summarize({}), InputError);
}

TEST(Summarize, StandardErrorOfUnitVarianceDraws) {
  Rng rng(2);
  std::vector<ExperimentRecord> recs(10000);
  for (auto& r : recs) {
    r.n = 1;
    r.cost_sum = rng.normal();
  }
  EXPECT_NEAR(summarize(recs)[0].stderr_, 0.01, 0.0005);
}

TEST(Fit, RecoversExactSyntheticLaws) {
  for (Growth g : {Growth::Log, Growth::Log32, Growth::Log2}) {
    const auto f = fit_leading(synthetic(g, 0.5, 1.0), g);
    EXPECT_NEAR(f.a, 0.5, 1e-9);
    EXPECT_NEAR(f.b, 1.0, 1e-9);
    EXPECT_EQ(f.growth, g);
    // refit on fitted values
    std::vector<SummaryRow> fitted;
    for (std::size_t n : {64u, 128u, 1024u}) {
      fitted.push_back({n, f.a * growth_value(g, static_cast<double>(n)) + f.b, 0.0, 1});
    }
    const auto again = fit_leading(fitted, g);
    EXPECT_NEAR(again.a, f.a, 1e-9);
    EXPECT_NEAR(again.b, f.b, 1e-9);
  }
}

// Ten sizes give 8 residual degrees of freedom; P(|t_8| > 3) is about 1.7%.
TEST(Fit, StandardErrorsCoverTheTruth) {
  Rng rng(77);
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    auto rows = synthetic(Growth::Log, 0.5, 1.0);
    for (auto& r : rows) r.mean += 0.01 * rng.normal();
    const auto f = fit_leading(rows, Growth::Log);
    covered += std::abs(f.a - 0.5) <= 3.0 * f.se_a;
  }
  EXPECT_GE(covered, 190);
}

TEST(Fit, NeedsThreeDistinctN) {
  std::vector<SummaryRow> rows = {{8, 1.0, 0, 1}, {16, 2.0, 0, 1}};
  EXPECT_THROW(fit_leading(rows, Growth::Log), FitError);
}

TEST(PredictorReport, GaussianTable) {
  const auto rows = predictor_report(Gaussian2D{}, {1e4, 1e6, 1e8, 1e10}, PredictorMode::Bipartite);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[0].numeric, 27.177, 5e-4);
  EXPECT_NEAR(*rows[0].closed_form, 42.415, 5e-4);
  EXPECT_NEAR(*rows[0].ratio, 0.6407, 5e-5);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(*rows[i].ratio, *rows[i - 1].ratio);
  const auto mx = predictor_report(Maxwellian{}, {1e4}, PredictorMode::Bipartite);
  EXPECT_NEAR(*mx[0].closed_form, 8.389, 5e-4);
  const auto tg = predictor_report(make_truncated_gaussian(1e4, 1.5, 0.5), {1e4}, PredictorMode::Bipartite);
  EXPECT_FALSE(tg[0].closed_form.has_value());
}

TEST(Persistence, CsvRoundTrip) {
  const auto recs = run_experiment(small_config());
  std::stringstream ss;
  write_records_csv(ss, recs);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "n,trial,seed,mode,cost_sum,cost_w2sq,wall_ms");
  const auto back = read_records_csv(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].seed, recs[i].seed);
    EXPECT_EQ(back[i].cost_sum, recs[i].cost_sum);
    EXPECT_EQ(back[i].cost_w2sq, recs[i].cost_w2sq);
  }
  std::stringstream bad("n,trial\n1,2\n");
  EXPECT_THROW(read_records_csv(bad), InputError);
}

TEST(Persistence, SummaryDiffersOnlyInTimestamp) {
  ExperimentConfig cfg = small_config();
  const auto rows = summarize(run_experiment(cfg));
  const auto fit = fit_leading(rows, Growth::Log);
  auto a = summary_json(cfg, rows, fit, "2020-01-01T00:00:00Z");
  auto b = summary_json(cfg, summarize(run_experiment(cfg)), fit, "2021-06-01T00:00:00Z");
  EXPECT_NE(a, b);
  a.erase("metadata");
  b.erase("metadata");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_TRUE(a["per_n"].contains("16"));
  for (const char* k : {"mean", "stderr", "trials"}) EXPECT_TRUE(a["per_n"]["16"].contains(k));
  for (const char* k : {"a", "b", "se_a", "se_b", "g"}) EXPECT_TRUE(a["fit"].contains(k));
}

TEST(ConfigJson, RoundTripAndUnknownFields) {
  const auto j = nlohmann::json::parse(R"({
    "density": {"family": "multiscaling", "radius": 2, "radii": [0, 1, 2], "exponents": [1, 0.5]},
    "n_values": [128, 256, 512], "trials": 10, "mode": "bipartite", "seed": 7, "growth": "log"})");
  const auto cfg = experiment_config_from_json(j);
  EXPECT_EQ(cfg.n_values.size(), 3u);
  EXPECT_EQ(*cfg.trials, 10u);
  EXPECT_EQ(*cfg.growth, Growth::Log);
  const auto again = experiment_config_from_json(experiment_config_to_json(cfg));
  EXPECT_EQ(experiment_config_to_json(again), experiment_config_to_json(cfg));
  auto extra = j;
  extra["colour"] = "red";
  EXPECT_THROW(experiment_config_from_json(extra), ConfigError);
  auto bad_density = j;
  bad_density["density"]["foo"] = 1;
  EXPECT_THROW(experiment_config_from_json(bad_density), ConfigError);
  auto bad_mode = j;
  bad_mode["mode"] = "sideways";
  EXPECT_THROW(experiment_config_from_json(bad_mode), ConfigError);
  auto unsorted = j;
  unsorted["n_values"] = {256, 128};
  EXPECT_THROW(experiment_config_from_json(unsorted), ConfigError);
}

TEST(ConfigJson, ShippedConfigsParse) {
  const std::filesystem::path dir = std::filesystem::path(MATCHLAB_TEST_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    const auto j = nlohmann::json::parse(in);
    if (j.contains("n_values")) {
      EXPECT_NO_THROW(experiment_config_from_json(j)) << entry.path();
      ++seen;
    }
  }
  EXPECT_GT(seen, 0);
}
