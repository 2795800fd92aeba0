#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hci/forecast.hpp"
#include "hci/index.hpp"
#include "hci/inference.hpp"
#include "hci/parallel.hpp"
#include "hci/predictor.hpp"
#include "hci/scenario.hpp"
#include "hci/synthgen.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kAppVersion = "1.0.0";

// Usage problems detected after argument parsing (still exit code 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Every run drops a manifest next to its outputs so it can be replayed.
struct Manifest {
  std::string subcommand;
  std::vector<std::string> argv;
  std::map<std::string, std::string> inputs;  // path -> content hash
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  int threads = 0;

  void add_input(const std::string& path, std::string_view content) {
    inputs[path] = hex64(fnv1a64(content));
  }
  std::string to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["argv"] = argv;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    if (seed) j["seed"] = *seed;
    j["threads"] = threads;
    j["versions"] = {{"app", kAppVersion}, {"model_schema", hci::kModelSchemaVersion}};
    return j.dump(2) + "\n";
  }
  void write(const std::string& path) const { hci::write_text_file(path, to_json()); }
};

std::string manifest_path_for(const std::string& out_path) {
  return out_path + ".manifest.json";
}

std::string read_input(const std::string& path, Manifest& manifest) {
  const std::string text = hci::read_text_file(path);
  manifest.add_input(path, text);
  return text;
}

void write_output(const std::string& path, std::string_view content, Manifest& manifest) {
  hci::write_text_file(path, content);
  manifest.outputs.push_back(path);
}

hci::Snapshot load_snapshot_input(const std::string& path, hci::Date date, Manifest& manifest) {
  const std::string text = read_input(path, manifest);
  hci::ValidationReport report;
  hci::Snapshot snap = hci::parse_snapshot_csv(text, date, report);
  if (!report.rejections.empty()) {
    std::cerr << "note: " << path << ": rejected " << report.rejected_rows() << " of "
              << report.total_rows << " rows\n";
  }
  return snap;
}

// --snapshot DATE=PATH arguments plus a directory of snapshot_<date>.csv files.
std::vector<std::pair<hci::Date, std::string>> collect_snapshot_args(
    const std::vector<std::string>& pairs, const std::string& dir) {
  std::vector<std::pair<hci::Date, std::string>> out;
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--snapshot expects DATE=PATH, got '" + p + "'");
    }
    out.emplace_back(hci::Date::parse(p.substr(0, eq)), p.substr(eq + 1));
  }
  if (!dir.empty()) {
    if (!fs::is_directory(dir)) throw hci::DataError("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      constexpr std::string_view prefix = "snapshot_";
      constexpr std::string_view suffix = ".csv";
      if (name.size() > prefix.size() + suffix.size() && name.starts_with(prefix) &&
          name.ends_with(suffix)) {
        const std::string date_part =
            name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
        out.emplace_back(hci::Date::parse(date_part), entry.path().string());
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) {
      throw hci::DataError("duplicate snapshot date " + out[i].first.iso());
    }
  }
  if (out.empty()) throw UsageError("no snapshots given (use --snapshot or --snapshot-dir)");
  return out;
}

std::vector<hci::Date> parse_date_list(const std::vector<std::string>& dates) {
  std::vector<hci::Date> out;
  out.reserve(dates.size());
  for (const auto& d : dates) out.push_back(hci::Date::parse(d));
  return out;
}

// Shared flags for subcommands that score snapshots through a model.
struct ScoreOptions {
  std::string model_path;
  std::vector<std::string> snapshot_pairs;
  std::string snapshot_dir;
  std::string statistic = "mean";
  std::string weighting = "frozen";
};

void add_score_options(CLI::App* cmd, ScoreOptions& opts) {
  cmd->add_option("--model", opts.model_path, "model JSON path")->required();
  cmd->add_option("--snapshot", opts.snapshot_pairs, "snapshot as DATE=PATH (repeatable)");
  cmd->add_option("--snapshot-dir", opts.snapshot_dir,
                  "directory of snapshot_<date>.csv files");
  cmd->add_option("--statistic", opts.statistic, "group statistic: mean|median")
      ->check(CLI::IsMember({"mean", "median"}));
  cmd->add_option("--weighting", opts.weighting, "weight policy: frozen|per_snapshot")
      ->check(CLI::IsMember({"frozen", "per_snapshot"}));
}

struct ScoredInputs {
  hci::BaselinePredictor predictor;
  std::vector<hci::Snapshot> snapshots;
  hci::Statistic stat = hci::Statistic::Mean;
  hci::WeightPolicy policy = hci::WeightPolicy::Frozen;
};

ScoredInputs load_scored_inputs(const ScoreOptions& opts, Manifest& manifest) {
  ScoredInputs in;
  in.predictor = hci::load_model_json(read_input(opts.model_path, manifest));
  in.stat = hci::statistic_from_string(opts.statistic);
  in.policy = hci::weight_policy_from_string(opts.weighting);
  for (const auto& [date, path] : collect_snapshot_args(opts.snapshot_pairs, opts.snapshot_dir)) {
    in.snapshots.push_back(load_snapshot_input(path, date, manifest));
  }
  return in;
}

int run_generate(const std::string& config_path, const std::string& scenario_path,
                 const std::vector<std::string>& dates_arg, const std::string& start,
                 int count, int step_days, std::uint64_t seed, int n_override,
                 double noise_override, const std::string& out_dir, Manifest& manifest) {
  hci::GeneratorConfig config = hci::GeneratorConfig::defaults();
  if (!config_path.empty()) {
    config = hci::generator_config_from_json(read_input(config_path, manifest));
  }
  if (n_override > 0) config.n_per_snapshot = n_override;
  if (noise_override >= 0.0) config.noise_sd = noise_override;

  std::vector<hci::Date> dates = parse_date_list(dates_arg);
  if (dates.empty()) {
    if (start.empty() || count <= 0) {
      throw UsageError("give --dates, or --start with --count");
    }
    hci::Date d = hci::Date::parse(start);
    for (int i = 0; i < count; ++i) {
      dates.push_back(d);
      d = d.plus_days(step_days);
    }
  }
  std::optional<hci::ScenarioSpec> scenario;
  if (!scenario_path.empty()) {
    scenario = hci::scenario_spec_from_json(read_input(scenario_path, manifest));
  }
  const hci::GeneratedSeries series =
      hci::generate_series(config, dates, scenario ? &*scenario : nullptr, seed);

  fs::create_directories(out_dir);
  for (const auto& snap : series.snapshots) {
    const std::string path = (fs::path(out_dir) / ("snapshot_" + snap.date.iso() + ".csv")).string();
    write_output(path, hci::snapshot_to_csv(snap), manifest);
  }
  std::string truth = "date,value\n";
  for (std::size_t i = 0; i < series.true_path.dates.size(); ++i) {
    truth += series.true_path.dates[i].iso() + "," +
             hci::format_double(series.true_path.value[i]) + "\n";
  }
  write_output((fs::path(out_dir) / "true_path.csv").string(), truth, manifest);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote " << series.snapshots.size() << " snapshots to " << out_dir << "\n";
  return 0;
}

int run_fit(const std::string& baseline_path, const std::string& date_str,
            const std::string& kind, const hci::ForestParams& forest,
            std::optional<std::uint64_t> seed, const std::string& out_path,
            Manifest& manifest) {
  const hci::Date date = hci::Date::parse(date_str);
  const hci::Snapshot baseline = load_snapshot_input(baseline_path, date, manifest);
  std::vector<std::string> warnings;
  hci::BaselinePredictor predictor;
  if (kind == "linear") {
    predictor = hci::fit_linear(baseline, &warnings);
  } else {
    if (!seed) throw UsageError("--seed is required for forest fits");
    manifest.seed = *seed;
    predictor = hci::fit_forest(baseline, forest, *seed);
  }
  predictor.calibration = hci::calibrate(baseline, predictor);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  write_output(out_path, hci::save_model_json(predictor), manifest);
  manifest.write(manifest_path_for(out_path));
  std::cout << "model " << hci::model_id(predictor) << " (" << kind << ", n="
            << predictor.n_train << ") -> " << out_path << "\n";
  return 0;
}

int run_index(const ScoreOptions& opts, double smoothing, const std::string& out_path,
              const std::string& jsonl_path, Manifest& manifest) {
  ScoredInputs in = load_scored_inputs(opts, manifest);
  hci::IndexSeries series;
  series.statistic = in.stat;
  series.policy = in.policy;
  series.model_id = hci::model_id(in.predictor);
  std::vector<std::string> warnings;
  for (const auto& snap : in.snapshots) {
    series.points.push_back(
        hci::score_snapshot(snap, in.predictor, in.stat, in.policy, &warnings));
  }
  if (smoothing != 0.0) series = hci::smooth_series(series, smoothing);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  write_output(out_path, hci::index_series_to_csv(series), manifest);
  if (!jsonl_path.empty()) {
    write_output(jsonl_path, hci::index_series_to_jsonl(series), manifest);
  }
  manifest.write(manifest_path_for(out_path));
  return 0;
}

int run_subindex(const ScoreOptions& opts, const std::string& scheme_str,
                 const std::string& out_path, Manifest& manifest) {
  ScoredInputs in = load_scored_inputs(opts, manifest);
  const hci::Scheme scheme = hci::scheme_from_string(scheme_str);
  hci::SubIndexSeries series;
  series.scheme = scheme;
  series.statistic = in.stat;
  series.model_id = hci::model_id(in.predictor);
  for (const auto& snap : in.snapshots) {
    const hci::RatioSet ratios = hci::compute_ratios(snap, in.predictor);
    const hci::GroupStats stats = hci::group_stats(ratios, scheme);
    series.dates.push_back(snap.date);
    series.values.push_back(
        hci::sub_indices(stats, in.predictor.calibration, scheme, in.stat));
  }
  write_output(out_path, hci::sub_index_series_to_csv(series), manifest);
  manifest.write(manifest_path_for(out_path));
  return 0;
}

int run_ci(const ScoreOptions& opts, const std::string& method, double level, int replicates,
           std::optional<std::uint64_t> seed, const std::string& out_path,
           Manifest& manifest) {
  ScoredInputs in = load_scored_inputs(opts, manifest);
  if (in.snapshots.size() != 1) throw UsageError("ci expects exactly one snapshot");
  const hci::Snapshot& snap = in.snapshots.front();
  const hci::RatioSet ratios = hci::compute_ratios(snap, in.predictor);
  const hci::GroupStats stats = hci::group_stats(ratios, hci::Scheme::CaratClass);
  const hci::WeightVector weights =
      in.policy == hci::WeightPolicy::Frozen
          ? in.predictor.calibration.baseline_weights
          : hci::final_weights(hci::proportional_weights(snap));
  const hci::HciResult point =
      hci::compute_hci(stats, weights, in.predictor.calibration, in.stat);

  hci::CiResult ci;
  if (method == "normal") {
    const hci::VarianceEstimate var =
        hci::hci_variance(stats, weights, in.predictor.calibration, in.stat);
    ci = hci::normal_ci(point.headline, var, level);
  } else {
    if (!seed) throw UsageError("--seed is required for bootstrap methods");
    manifest.seed = *seed;
    const hci::GroupedRatios groups = hci::group_ratio_values(ratios);
    if (method == "bootstrap") {
      ci = hci::bootstrap_ci(groups, weights, in.predictor.calibration, in.stat, level,
                             replicates, *seed);
    } else {
      ci = hci::percentile_t_ci(groups, weights, in.predictor.calibration, in.stat, level,
                                replicates, *seed);
    }
  }
  json j;
  j["date"] = snap.date.iso();
  j["headline"] = point.headline;
  j["method"] = ci.method;
  j["level"] = ci.level;
  j["lower"] = ci.lower;
  j["upper"] = ci.upper;
  j["se"] = ci.se;
  if (ci.replicates > 0) {
    j["B"] = ci.replicates;
    j["seed"] = ci.seed;
  }
  if (!ci.warnings.empty()) j["warnings"] = ci.warnings;
  write_output(out_path, j.dump(2) + "\n", manifest);
  manifest.write(manifest_path_for(out_path));
  std::cout << j.dump() << "\n";
  return 0;
}

int run_forecast(const std::string& index_path, const std::string& method, int horizon,
                 double level, double alpha, double beta, int ar_p, int ar_d, bool auto_order,
                 const std::string& out_path, Manifest& manifest) {
  const hci::IndexSeries series = hci::index_series_from_csv(read_input(index_path, manifest));
  if (series.points.size() < 2) throw hci::DataError("need at least two index points");
  std::vector<double> x;
  std::vector<int> spacings;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    x.push_back(series.points[i].headline);
    if (i > 0) {
      spacings.push_back(series.points[i].date.serial() - series.points[i - 1].date.serial());
    }
  }
  std::sort(spacings.begin(), spacings.end());
  const int step = spacings[spacings.size() / 2];

  hci::ForecastResult fc;
  if (method == "holt") {
    const hci::HoltFit fit = (alpha > 0.0 && beta > 0.0)
                                 ? hci::fit_holt_fixed(x, alpha, beta)
                                 : hci::fit_holt(x);
    fc = hci::forecast_holt(fit, horizon, level);
  } else {
    const hci::ArFit fit =
        auto_order ? hci::fit_ar_diff_auto(x) : hci::fit_ar_diff(x, ar_p, ar_d);
    fc = hci::forecast_ar(fit, horizon, level);
  }
  std::string csv = "date,point,lower,upper,method,level\n";
  hci::Date d = series.points.back().date;
  char levelbuf[16];
  std::snprintf(levelbuf, sizeof levelbuf, "%.2f", level);
  for (int h = 0; h < horizon; ++h) {
    d = d.plus_days(step);
    const auto hi = static_cast<std::size_t>(h);
    csv += d.iso() + "," + hci::format_double(fc.point[hi]) + "," +
           hci::format_double(fc.lower[hi]) + "," + hci::format_double(fc.upper[hi]) + "," +
           fc.method + "," + levelbuf + "\n";
  }
  write_output(out_path, csv, manifest);
  manifest.write(manifest_path_for(out_path));
  return 0;
}

int run_scenario(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                 const std::string& out_dir, Manifest& manifest) {
  hci::ExperimentConfig config =
      hci::experiment_config_from_json(read_input(config_path, manifest));
  if (seed_override) config.seed = *seed_override;
  manifest.seed = config.seed;
  const hci::ExperimentReport report = hci::run_experiment(config);
  fs::create_directories(out_dir);
  write_output((fs::path(out_dir) / "report.json").string(),
               hci::experiment_report_to_json(report), manifest);
  write_output((fs::path(out_dir) / "plot.csv").string(), hci::report_to_plot_csv(report),
               manifest);
  write_output((fs::path(out_dir) / "index.csv").string(),
               hci::index_series_to_csv(report.series), manifest);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  std::cout << "max |headline - true| = " << hci::format_double(report.max_abs_tracking_error)
            << "\n";
  return 0;
}

int run_splice(const std::string& older_path, const std::string& newer_path,
               const std::string& link_str, const std::string& out_path, Manifest& manifest) {
  const hci::IndexSeries older = hci::index_series_from_csv(read_input(older_path, manifest));
  const hci::IndexSeries newer = hci::index_series_from_csv(read_input(newer_path, manifest));
  const hci::IndexSeries spliced =
      hci::splice_series(older, newer, hci::Date::parse(link_str));
  write_output(out_path, hci::index_series_to_csv(spliced), manifest);
  manifest.write(manifest_path_for(out_path));
  std::cout << spliced.splice_note << "\n";
  return 0;
}

int run_compare(const std::string& index_path, const std::string& external_path,
                const std::string& out_path, Manifest& manifest) {
  const hci::IndexSeries series = hci::index_series_from_csv(read_input(index_path, manifest));
  const hci::ExternalSeries external =
      hci::import_external_series(read_input(external_path, manifest));
  const hci::AlignParams params = hci::align_series(series, external);
  const hci::ExternalSeries aligned = hci::apply_alignment(params, external);
  std::string csv = "date,value\n";
  for (const auto& [d, v] : aligned.points) {
    csv += d.iso() + "," + hci::format_double(v) + "\n";
  }
  write_output(out_path, csv, manifest);
  manifest.write(manifest_path_for(out_path));
  json j;
  j["a"] = params.a;
  j["b"] = params.b;
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hedonic collectable index toolkit for wholesale diamond prices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("hci ") + kAppVersion + " (model schema " +
                                        std::string(hci::kModelSchemaVersion) + ")");
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = library default)");

  // generate
  auto* generate = app.add_subcommand("generate", "generate synthetic market snapshots");
  std::string gen_config, gen_scenario, gen_start, gen_out;
  std::vector<std::string> gen_dates;
  int gen_count = 0, gen_step = 7, gen_n = 0;
  double gen_noise = -1.0;
  std::uint64_t gen_seed = 0;
  generate->add_option("--config", gen_config, "generator config JSON");
  generate->add_option("--scenario", gen_scenario, "scenario spec JSON");
  generate->add_option("--dates", gen_dates, "snapshot dates (ISO, repeatable)");
  generate->add_option("--start", gen_start, "first snapshot date (ISO)");
  generate->add_option("--count", gen_count, "number of snapshots");
  generate->add_option("--step-days", gen_step, "days between snapshots")->check(CLI::PositiveNumber);
  generate->add_option("--n", gen_n, "records per snapshot (overrides config)");
  generate->add_option("--noise", gen_noise, "noise sd (overrides config)");
  generate->add_option("--seed", gen_seed, "RNG seed")->required();
  generate->add_option("--out-dir", gen_out, "output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "fit the baseline predictor");
  std::string fit_baseline, fit_date, fit_kind = "linear", fit_out;
  hci::ForestParams fit_forest;
  std::optional<std::uint64_t> fit_seed;
  fit->add_option("--baseline", fit_baseline, "baseline snapshot CSV")->required();
  fit->add_option("--date", fit_date, "baseline date (ISO)")->required();
  fit->add_option("--model-kind", fit_kind, "linear|forest")
      ->check(CLI::IsMember({"linear", "forest"}));
  fit->add_option("--trees", fit_forest.n_trees, "forest: number of trees");
  fit->add_option("--max-depth", fit_forest.max_depth, "forest: depth limit");
  fit->add_option("--min-leaf", fit_forest.min_leaf, "forest: minimum leaf size");
  fit->add_option("--bag-fraction", fit_forest.bag_fraction, "forest: subsample fraction");
  fit->add_option("--features-per-split", fit_forest.features_per_split,
                  "forest: candidate features per split (0 = sqrt rule)");
  fit->add_option("--seed", fit_seed, "RNG seed (forest)");
  fit->add_option("--out", fit_out, "model JSON output path")->required();

  // index
  auto* index = app.add_subcommand("index", "compute the index series");
  ScoreOptions index_opts;
  double index_smoothing = 0.0;
  std::string index_out, index_jsonl;
  add_score_options(index, index_opts);
  index->add_option("--smoothing", index_smoothing, "EWMA lambda in (0,1]");
  index->add_option("--out", index_out, "index CSV output path")->required();
  index->add_option("--jsonl", index_jsonl, "optional JSON-lines output path");

  // subindex
  auto* subindex = app.add_subcommand("subindex", "compute sub-index series");
  ScoreOptions sub_opts;
  std::string sub_scheme = "carat_class", sub_out;
  add_score_options(subindex, sub_opts);
  subindex->add_option("--scheme", sub_scheme, "carat_class|shape|colour")
      ->check(CLI::IsMember({"carat_class", "shape", "colour"}));
  subindex->add_option("--out", sub_out, "sub-index CSV output path")->required();

  // ci
  auto* ci = app.add_subcommand("ci", "confidence interval for one snapshot's headline");
  ScoreOptions ci_opts;
  std::string ci_method = "normal", ci_out;
  double ci_level = 0.95;
  int ci_replicates = hci::kDefaultBootstrapReplicates;
  std::optional<std::uint64_t> ci_seed;
  add_score_options(ci, ci_opts);
  ci->add_option("--method", ci_method, "normal|bootstrap|percentile_t")
      ->check(CLI::IsMember({"normal", "bootstrap", "percentile_t"}));
  ci->add_option("--level", ci_level, "confidence level");
  ci->add_option("--replicates", ci_replicates, "bootstrap replicates");
  ci->add_option("--seed", ci_seed, "RNG seed (bootstrap methods)");
  ci->add_option("--out", ci_out, "result JSON output path")->required();

  // forecast
  auto* forecast = app.add_subcommand("forecast", "forecast the headline index");
  std::string fc_index, fc_method = "holt", fc_out;
  int fc_horizon = 4, fc_p = 1, fc_d = 1;
  double fc_level = 0.80, fc_alpha = 0.0, fc_beta = 0.0;
  bool fc_auto = false;
  forecast->add_option("--index", fc_index, "index CSV path")->required();
  forecast->add_option("--method", fc_method, "holt|ar")->check(CLI::IsMember({"holt", "ar"}));
  forecast->add_option("--horizon", fc_horizon, "steps ahead")->check(CLI::PositiveNumber);
  forecast->add_option("--level", fc_level, "interval level");
  forecast->add_option("--alpha", fc_alpha, "fixed Holt alpha (with --beta)");
  forecast->add_option("--beta", fc_beta, "fixed Holt beta (with --alpha)");
  forecast->add_option("--ar-p", fc_p, "AR order");
  forecast->add_option("--ar-d", fc_d, "differencing order");
  forecast->add_flag("--auto-order", fc_auto, "pick (p,d) by AICc");
  forecast->add_option("--out", fc_out, "forecast CSV output path")->required();

  // scenario
  auto* scenario = app.add_subcommand("scenario", "run an end-to-end experiment");
  std::string sc_config, sc_out;
  std::optional<std::uint64_t> sc_seed;
  scenario->add_option("--config", sc_config, "experiment config JSON")->required();
  scenario->add_option("--seed", sc_seed, "override the config seed");
  scenario->add_option("--out", sc_out, "output directory")->required();

  // splice
  auto* splice = app.add_subcommand("splice", "splice two index series at a link date");
  std::string sp_older, sp_newer, sp_link, sp_out;
  splice->add_option("--older", sp_older, "older index CSV")->required();
  splice->add_option("--newer", sp_newer, "newer index CSV")->required();
  splice->add_option("--link", sp_link, "link date (ISO)")->required();
  splice->add_option("--out", sp_out, "spliced CSV output path")->required();

  // compare
  auto* compare = app.add_subcommand("compare", "align an external series to the index");
  std::string cmp_index, cmp_external, cmp_out;
  compare->add_option("--index", cmp_index, "index CSV")->required();
  compare->add_option("--external", cmp_external, "external series CSV (date,value)")->required();
  compare->add_option("--out", cmp_out, "aligned CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  Manifest manifest;
  for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);
  manifest.threads = threads;
  if (threads > 0) hci::par::set_threads(threads);

  try {
    if (generate->parsed()) {
      manifest.subcommand = "generate";
      manifest.seed = gen_seed;
      return run_generate(gen_config, gen_scenario, gen_dates, gen_start, gen_count, gen_step,
                          gen_seed, gen_n, gen_noise, gen_out, manifest);
    }
    if (fit->parsed()) {
      manifest.subcommand = "fit";
      return run_fit(fit_baseline, fit_date, fit_kind, fit_forest, fit_seed, fit_out, manifest);
    }
    if (index->parsed()) {
      manifest.subcommand = "index";
      return run_index(index_opts, index_smoothing, index_out, index_jsonl, manifest);
    }
    if (subindex->parsed()) {
      manifest.subcommand = "subindex";
      return run_subindex(sub_opts, sub_scheme, sub_out, manifest);
    }
    if (ci->parsed()) {
      manifest.subcommand = "ci";
      return run_ci(ci_opts, ci_method, ci_level, ci_replicates, ci_seed, ci_out, manifest);
    }
    if (forecast->parsed()) {
      manifest.subcommand = "forecast";
      return run_forecast(fc_index, fc_method, fc_horizon, fc_level, fc_alpha, fc_beta, fc_p,
                          fc_d, fc_auto, fc_out, manifest);
    }
    if (scenario->parsed()) {
      manifest.subcommand = "scenario";
      return run_scenario(sc_config, sc_seed, sc_out, manifest);
    }
    if (splice->parsed()) {
      manifest.subcommand = "splice";
      return run_splice(sp_older, sp_newer, sp_link, sp_out, manifest);
    }
    if (compare->parsed()) {
      manifest.subcommand = "compare";
      return run_compare(cmp_index, cmp_external, cmp_out, manifest);
    }
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const hci::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
