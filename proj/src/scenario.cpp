#include "hci/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace hci {

namespace {

using nlohmann::json;

void check_dates(const ExperimentConfig& config) {
  Date prev = config.baseline_date;
  for (const Date d : config.snapshot_dates) {
    if (!(prev < d)) {
      throw DataError("snapshot dates must be strictly increasing after the baseline " +
                      config.baseline_date.iso());
    }
    prev = d;
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, Exec exec) {
  check_dates(config);
  if (config.model_kind != "linear" && config.model_kind != "forest") {
    throw DataError("unknown model kind '" + config.model_kind + "' (expected linear|forest)");
  }
  std::vector<Date> dates;
  dates.reserve(config.snapshot_dates.size() + 1);
  dates.push_back(config.baseline_date);
  dates.insert(dates.end(), config.snapshot_dates.begin(), config.snapshot_dates.end());

  const ScenarioSpec* spec = config.scenario ? &*config.scenario : nullptr;
  const GeneratedSeries gen = generate_series(config.generator, dates, spec, config.seed, exec);

  ExperimentReport report;
  BaselinePredictor predictor =
      config.model_kind == "linear"
          ? fit_linear(gen.snapshots.front(), &report.warnings, exec)
          : fit_forest(gen.snapshots.front(), config.forest, config.seed, exec);
  predictor.calibration = calibrate(gen.snapshots.front(), predictor, exec);
  report.model_id = model_id(predictor);

  IndexSeries series;
  series.statistic = config.statistic;
  series.policy = config.policy;
  series.model_id = report.model_id;
  SubIndexSeries shapes;
  shapes.scheme = Scheme::Shape;
  shapes.statistic = config.statistic;
  shapes.model_id = report.model_id;

  for (std::size_t i = 0; i < gen.snapshots.size(); ++i) {
    const Snapshot& snap = gen.snapshots[i];
    const RatioSet ratios = compute_ratios(snap, predictor, exec);
    const GroupStats cstats = group_stats(ratios, Scheme::CaratClass, exec);
    const GroupStats sstats = group_stats(ratios, Scheme::Shape, exec);
    const WeightVector weights = config.policy == WeightPolicy::Frozen
                                     ? predictor.calibration.baseline_weights
                                     : final_weights(proportional_weights(snap));
    HciResult hci = compute_hci(cstats, weights, predictor.calibration, config.statistic);
    for (auto& w : hci.warnings) {
      report.warnings.push_back(snap.date.iso() + ": " + w);
    }
    IndexPoint pt;
    pt.date = snap.date;
    pt.headline = hci.headline;
    const auto csubs =
        sub_indices(cstats, predictor.calibration, Scheme::CaratClass, config.statistic);
    for (int g = 0; g < kNumClasses; ++g) pt.subindex[g] = csubs[static_cast<std::size_t>(g)];
    series.points.push_back(pt);
    shapes.dates.push_back(snap.date);
    shapes.values.push_back(
        sub_indices(sstats, predictor.calibration, Scheme::Shape, config.statistic));
  }

  if (config.smoothing_lambda != 0.0) {
    series = smooth_series(series, config.smoothing_lambda);
  }
  report.series = std::move(series);
  report.shape_series = std::move(shapes);
  report.true_path = gen.true_path;

  report.tracking_error.resize(report.series.points.size());
  report.max_abs_tracking_error = 0.0;
  double trough = std::numeric_limits<double>::infinity();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < report.series.points.size(); ++i) {
    const auto& pt = report.series.points[i];
    report.tracking_error[i] = std::fabs(pt.headline - report.true_path.value[i]);
    report.max_abs_tracking_error =
        std::max(report.max_abs_tracking_error, report.tracking_error[i]);
    if (pt.headline < trough) {
      trough = pt.headline;
      report.trough_date = pt.date;
    }
    if (pt.headline > peak) {
      peak = pt.headline;
      report.peak_date = pt.date;
    }
  }
  report.trough_value = trough;
  report.peak_value = peak;
  return report;
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json j;
  j["generator"] = json::parse(generator_config_to_json(config.generator));
  j["baseline_date"] = config.baseline_date.iso();
  json dates = json::array();
  for (const Date d : config.snapshot_dates) dates.push_back(d.iso());
  j["snapshot_dates"] = dates;
  if (config.scenario) {
    j["scenario"] = json::parse(scenario_spec_to_json(*config.scenario));
  } else {
    j["scenario"] = nullptr;
  }
  json model;
  model["kind"] = config.model_kind;
  if (config.model_kind == "forest") {
    model["n_trees"] = config.forest.n_trees;
    model["max_depth"] = config.forest.max_depth;
    model["min_leaf"] = config.forest.min_leaf;
    model["bag_fraction"] = config.forest.bag_fraction;
    model["features_per_split"] = config.forest.features_per_split;
  }
  j["model"] = model;
  j["statistic"] = std::string(to_string(config.statistic));
  j["weighting"] = std::string(to_string(config.policy));
  if (config.smoothing_lambda != 0.0) {
    j["smoothing"] = config.smoothing_lambda;
  } else {
    j["smoothing"] = nullptr;
  }
  j["seed"] = config.seed;
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ExperimentConfig config;
    if (j.contains("generator") && !j.at("generator").is_null()) {
      config.generator = generator_config_from_json(j.at("generator").dump());
    } else {
      config.generator = GeneratorConfig::defaults();
    }
    config.baseline_date = Date::parse(j.at("baseline_date").get<std::string>());
    const json& dj = j.at("snapshot_dates");
    if (dj.is_array()) {
      for (const auto& e : dj) config.snapshot_dates.push_back(Date::parse(e.get<std::string>()));
    } else if (dj.is_object()) {
      const int count = dj.at("count").get<int>();
      const int step = dj.value("step_days", 7);
      if (count < 0 || step < 1) throw DataError("invalid snapshot date rule");
      Date d = config.baseline_date;
      for (int i = 0; i < count; ++i) {
        d = d.plus_days(step);
        config.snapshot_dates.push_back(d);
      }
    } else {
      throw DataError("snapshot_dates must be a list of dates or a {count, step_days} rule");
    }
    if (j.contains("scenario") && !j.at("scenario").is_null()) {
      config.scenario = scenario_spec_from_json(j.at("scenario").dump());
    }
    if (j.contains("model") && !j.at("model").is_null()) {
      const json& m = j.at("model");
      config.model_kind = m.value("kind", std::string("linear"));
      config.forest.n_trees = m.value("n_trees", config.forest.n_trees);
      config.forest.max_depth = m.value("max_depth", config.forest.max_depth);
      config.forest.min_leaf = m.value("min_leaf", config.forest.min_leaf);
      config.forest.bag_fraction = m.value("bag_fraction", config.forest.bag_fraction);
      config.forest.features_per_split =
          m.value("features_per_split", config.forest.features_per_split);
    }
    config.statistic = statistic_from_string(j.value("statistic", std::string("mean")));
    config.policy = weight_policy_from_string(j.value("weighting", std::string("frozen")));
    if (j.contains("smoothing") && !j.at("smoothing").is_null()) {
      config.smoothing_lambda = j.at("smoothing").get<double>();
    }
    config.seed = j.value("seed", std::uint64_t{0});
    return config;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad experiment config: ") + e.what());
  }
}

std::string experiment_report_to_json(const ExperimentReport& report) {
  json j;
  j["model_id"] = report.model_id;
  j["statistic"] = std::string(to_string(report.series.statistic));
  j["weighting"] = std::string(to_string(report.series.policy));
  j["max_abs_tracking_error"] = report.max_abs_tracking_error;
  j["trough"] = {{"date", report.trough_date.iso()}, {"headline", report.trough_value}};
  j["peak"] = {{"date", report.peak_date.iso()}, {"headline", report.peak_value}};
  json rows = json::array();
  for (std::size_t i = 0; i < report.series.points.size(); ++i) {
    const auto& pt = report.series.points[i];
    json row;
    row["date"] = pt.date.iso();
    row["headline"] = pt.headline;
    json subs = json::array();
    for (const double v : pt.subindex) {
      if (std::isfinite(v)) {
        subs.push_back(v);
      } else {
        subs.push_back(nullptr);
      }
    }
    row["subindices"] = subs;
    row["true_path"] = report.true_path.value[i];
    row["tracking_error"] = report.tracking_error[i];
    rows.push_back(row);
  }
  j["points"] = rows;
  json shape_rows = json::array();
  for (std::size_t i = 0; i < report.shape_series.dates.size(); ++i) {
    json row;
    row["date"] = report.shape_series.dates[i].iso();
    json vals = json::object();
    for (int g = 0; g < kNumShapes; ++g) {
      const double v = report.shape_series.values[i][static_cast<std::size_t>(g)];
      if (std::isfinite(v)) {
        vals[std::string(to_string(static_cast<Shape>(g)))] = v;
      }
    }
    row["subindices"] = vals;
    shape_rows.push_back(row);
  }
  j["shape_points"] = shape_rows;
  json weights = json::array();
  for (const double w : report.true_path.weights) weights.push_back(w);
  j["true_path_weights"] = weights;
  if (!report.warnings.empty()) j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string report_to_plot_csv(const ExperimentReport& report, bool carat_subs,
                               bool shape_subs) {
  std::ostringstream os;
  os << "date,series,value\n";
  const auto emit = [&os](const Date& d, const std::string& name, double v) {
    os << d.iso() << ',' << name << ',';
    if (std::isfinite(v)) os << format_double(v);
    os << '\n';
  };
  for (std::size_t i = 0; i < report.series.points.size(); ++i) {
    const auto& pt = report.series.points[i];
    emit(pt.date, "headline", pt.headline);
    emit(pt.date, "true_path", report.true_path.value[i]);
    if (carat_subs) {
      for (int g = 0; g < kNumClasses; ++g) {
        emit(pt.date, "class_" + std::to_string(g + 1), pt.subindex[g]);
      }
    }
    if (shape_subs) {
      for (int g = 0; g < kNumShapes; ++g) {
        emit(pt.date, std::string("shape_") + std::string(to_string(static_cast<Shape>(g))),
             report.shape_series.values[i][static_cast<std::size_t>(g)]);
      }
    }
  }
  return os.str();
}

}  // namespace hci
