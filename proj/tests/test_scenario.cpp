#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hci/scenario.hpp"

using namespace hci;

namespace {

ExperimentConfig base_config(std::uint64_t seed, int n_dates, int n_per_snapshot) {
  ExperimentConfig config;
  config.generator = GeneratorConfig::defaults();
  config.generator.n_per_snapshot = n_per_snapshot;
  config.baseline_date = Date::parse("2026-01-05");
  for (int i = 1; i <= n_dates; ++i) {
    config.snapshot_dates.push_back(config.baseline_date.plus_days(7 * i));
  }
  config.seed = seed;
  return config;
}

std::size_t count_rows(const std::string& csv) {
  return static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("a flat market reads 1000 everywhere") {
  ExperimentConfig config = base_config(3, 5, 4000);
  // High price scale keeps cent rounding far below the tolerance.
  config.generator.price_law.base = std::log(1e10);
  config.generator.noise_sd = 0.0;
  const ExperimentReport report = run_experiment(config);
  // The baseline itself is scored as the first point.
  REQUIRE(report.series.points.size() == 6);
  for (const IndexPoint& pt : report.series.points) {
    CHECK(pt.headline == doctest::Approx(1000.0).epsilon(1e-6));
  }
  for (const double v : report.true_path.value) CHECK(v == 1000.0);
  CHECK(report.max_abs_tracking_error < 1e-3);
}

TEST_CASE("a small-diamond slump shows up at the published depth") {
  ExperimentConfig config = base_config(11, 14, 20000);
  config.generator.noise_sd = 0.1;
  ScenarioSpec spec;
  spec.kind = ScenarioKind::SmallDiamondSlump;
  spec.start = 1;
  spec.duration = 13;
  config.scenario = spec;
  const ExperimentReport report = run_experiment(config);

  const auto& w = report.true_path.weights;
  const double trough_true = 1000.0 * (1.0 - 0.10 * (w[0] + w[1]));
  CHECK(report.trough_value == doctest::Approx(trough_true).epsilon(0.01));
  // Deepest dip inside the middle of the slump window.
  const double shoulder_true = 1000.0 * (1.0 - 0.05 * (w[0] + w[1]));
  double min_true = 2000.0;
  for (const double v : report.true_path.value) min_true = std::min(min_true, v);
  CHECK(min_true == doctest::Approx(trough_true).epsilon(1e-9));
  CHECK(shoulder_true > trough_true);
  // The index never loses track of the truth.
  CHECK(report.max_abs_tracking_error < 0.01 * trough_true);
}

TEST_CASE("a fashion shift moves the cushion sub-index and then reverts") {
  ExperimentConfig config = base_config(7, 8, 20000);
  config.generator.noise_sd = 0.1;
  ScenarioSpec spec;
  spec.kind = ScenarioKind::FashionShift;
  spec.start = 2;
  spec.duration = 3;
  config.scenario = spec;
  const ExperimentReport report = run_experiment(config);

  REQUIRE(report.shape_series.dates.size() == 9);  // baseline + 8 snapshots
  const int round_g = 0;
  int cushion_g = -1;
  for (int g = 0; g < kNumShapes; ++g) {
    if (scheme_group_label(Scheme::Shape, g) == "Cushion") cushion_g = g;
  }
  REQUIRE(cushion_g >= 0);
  // Series index i is offset i in the scored list (baseline at 0), so the
  // shocked dates sit at indices 2..4: cushion prices carry a 5% premium
  // there; round stays flat.
  for (int i = 2; i <= 4; ++i) {
    CHECK(report.shape_series.values[static_cast<std::size_t>(i)][cushion_g] ==
          doctest::Approx(1050.0).epsilon(0.01));
    CHECK(report.shape_series.values[static_cast<std::size_t>(i)][round_g] ==
          doctest::Approx(1000.0).epsilon(0.005));
  }
  // After the window everything reverts.
  const auto& last = report.shape_series.values.back();
  CHECK(last[cushion_g] == doctest::Approx(1000.0).epsilon(0.005));
  CHECK(report.series.points.back().headline == doctest::Approx(1000.0).epsilon(0.005));
}

TEST_CASE("report invariants hold") {
  ExperimentConfig config = base_config(5, 6, 8000);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::FashionShift;
  spec.start = 1;
  spec.duration = 3;
  config.scenario = spec;
  const ExperimentReport report = run_experiment(config);
  REQUIRE(report.tracking_error.size() == report.series.points.size());
  REQUIRE(report.true_path.value.size() == report.series.points.size());
  double max_err = 0.0;
  double trough = std::numeric_limits<double>::infinity();
  double peak = -trough;
  for (std::size_t i = 0; i < report.series.points.size(); ++i) {
    const double err =
        std::abs(report.series.points[i].headline - report.true_path.value[i]);
    CHECK(report.tracking_error[i] == doctest::Approx(err).epsilon(1e-12));
    max_err = std::max(max_err, err);
    trough = std::min(trough, report.series.points[i].headline);
    peak = std::max(peak, report.series.points[i].headline);
  }
  CHECK(report.max_abs_tracking_error == doctest::Approx(max_err).epsilon(1e-12));
  CHECK(report.trough_value == doctest::Approx(trough).epsilon(1e-12));
  CHECK(report.peak_value == doctest::Approx(peak).epsilon(1e-12));
  CHECK(report.trough_date >= report.series.points.front().date);
  CHECK(report.model_id == report.series.model_id);
  CHECK(!experiment_report_to_json(report).empty());
}

TEST_CASE("plot CSV emits one row per date and series") {
  ExperimentConfig config = base_config(9, 3, 3000);
  const ExperimentReport report = run_experiment(config);
  REQUIRE(report.series.points.size() == 4);  // baseline + 3 snapshots
  const std::string full = report_to_plot_csv(report);
  // headline + true path + 7 carat classes + 10 shapes = 19 series per date.
  CHECK(count_rows(full) == 1 + 4 * 19);
  const std::string bare = report_to_plot_csv(report, false, false);
  CHECK(count_rows(bare) == 1 + 4 * 2);
  CHECK(bare.find("true_path") != std::string::npos);
  CHECK(bare.find("headline") != std::string::npos);
  CHECK(full.find("shape_Cushion") != std::string::npos);
  CHECK(full.find("class_4") != std::string::npos);
}

TEST_CASE("experiment config round-trips through JSON") {
  ExperimentConfig config = base_config(12, 4, 5000);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::FashionShift;
  spec.start = 2;
  spec.duration = 2;
  config.scenario = spec;
  config.statistic = Statistic::Median;
  config.policy = WeightPolicy::PerSnapshot;
  config.smoothing_lambda = 0.4;
  config.model_kind = "forest";
  config.forest.n_trees = 25;
  const std::string text = experiment_config_to_json(config);
  const ExperimentConfig back = experiment_config_from_json(text);
  CHECK(back.baseline_date == config.baseline_date);
  REQUIRE(back.snapshot_dates.size() == 4);
  CHECK(back.snapshot_dates[3] == config.snapshot_dates[3]);
  REQUIRE(back.scenario.has_value());
  CHECK(back.scenario->kind == ScenarioKind::FashionShift);
  CHECK(back.scenario->start == 2);
  CHECK(back.statistic == Statistic::Median);
  CHECK(back.policy == WeightPolicy::PerSnapshot);
  CHECK(back.smoothing_lambda == doctest::Approx(0.4));
  CHECK(back.model_kind == "forest");
  CHECK(back.forest.n_trees == 25);
  CHECK(back.seed == 12);
  CHECK(experiment_config_to_json(back) == text);
}

TEST_CASE("config JSON accepts a compact date rule") {
  const std::string text = R"({
    "baseline_date": "2026-01-05",
    "snapshot_dates": {"count": 3, "step_days": 14},
    "seed": 9
  })";
  const ExperimentConfig config = experiment_config_from_json(text);
  REQUIRE(config.snapshot_dates.size() == 3);
  CHECK(config.snapshot_dates[0] == Date::parse("2026-01-19"));
  CHECK(config.snapshot_dates[2] == Date::parse("2026-02-16"));
  CHECK(config.model_kind == "linear");
  CHECK(config.statistic == Statistic::Mean);
}

TEST_CASE("config JSON rejects garbage") {
  CHECK_THROWS_AS(experiment_config_from_json("not json"), DataError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"baseline_date": "2026-13-40"})"),
                  DataError);
}

TEST_CASE("snapshot dates must follow the baseline") {
  ExperimentConfig config = base_config(1, 2, 1000);
  config.snapshot_dates[1] = config.baseline_date;  // not strictly increasing
  CHECK_THROWS_AS(run_experiment(config), DataError);
  ExperimentConfig before = base_config(1, 1, 1000);
  before.snapshot_dates[0] = before.baseline_date.plus_days(-7);
  CHECK_THROWS_AS(run_experiment(before), DataError);
}

TEST_CASE("experiments are deterministic in the seed") {
  const ExperimentConfig config = base_config(21, 3, 4000);
  const ExperimentReport a = run_experiment(config);
  const ExperimentReport b = run_experiment(config);
  CHECK(experiment_report_to_json(a) == experiment_report_to_json(b));
  ExperimentConfig other = config;
  other.seed = 22;
  const ExperimentReport c = run_experiment(other);
  CHECK(experiment_report_to_json(a) != experiment_report_to_json(c));
}

TEST_CASE("a forest-backed experiment runs end to end") {
  ExperimentConfig config = base_config(5, 2, 3000);
  config.model_kind = "forest";
  config.forest.n_trees = 10;
  config.forest.max_depth = 8;
  const ExperimentReport report = run_experiment(config);
  REQUIRE(report.series.points.size() == 3);  // baseline + 2 snapshots
  for (const IndexPoint& pt : report.series.points) {
    CHECK(pt.headline == doctest::Approx(1000.0).epsilon(0.05));
  }
  CHECK_THROWS_AS(
      [&] {
        ExperimentConfig bad = config;
        bad.model_kind = "neural";
        run_experiment(bad);
      }(),
      DataError);
}

TEST_CASE("smoothing carries into the reported series") {
  ExperimentConfig config = base_config(33, 4, 3000);
  config.smoothing_lambda = 0.5;
  const ExperimentReport report = run_experiment(config);
  CHECK(report.series.smoothing_lambda == 0.5);
}

}  // TEST_SUITE
