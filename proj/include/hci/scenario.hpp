#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hci/index.hpp"
#include "hci/predictor.hpp"
#include "hci/synthgen.hpp"

namespace hci {

// End-to-end experiment: generate a baseline market, fit the predictor, run a
// scenario through the generator, and compare the index to the true path.
struct ExperimentConfig {
  GeneratorConfig generator;
  Date baseline_date;
  std::vector<Date> snapshot_dates;  // scored dates, strictly after the baseline
  std::optional<ScenarioSpec> scenario;
  std::string model_kind = "linear";  // linear | forest
  ForestParams forest;
  Statistic statistic = Statistic::Mean;
  WeightPolicy policy = WeightPolicy::Frozen;
  double smoothing_lambda = 0.0;  // 0 disables smoothing
  std::uint64_t seed = 0;
};

struct ExperimentReport {
  IndexSeries series;            // headline + carat-class sub-indices
  SubIndexSeries shape_series;   // shape sub-indices over the same dates
  TrueIndexPath true_path;
  std::vector<double> tracking_error;  // |headline - true path| per date
  double max_abs_tracking_error = 0.0;
  Date trough_date;
  double trough_value = 0.0;
  Date peak_date;
  double peak_value = 0.0;
  std::string model_id;
  std::vector<std::string> warnings;
};

ExperimentReport run_experiment(const ExperimentConfig& config, Exec exec = Exec::parallel);

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

std::string experiment_report_to_json(const ExperimentReport& report);

// Long-format plot data: one row per (date, series). Series are the headline,
// the true path, and optionally the carat-class and shape sub-indices.
std::string report_to_plot_csv(const ExperimentReport& report, bool carat_subs = true,
                               bool shape_subs = true);

}  // namespace hci
