#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hci/domain.hpp"
#include "hci/parallel.hpp"

namespace hci {

inline constexpr std::string_view kModelSchemaVersion = "hci-model/1";

// Hedonic feature layout. Carat enters as a piecewise-linear spline: one
// intercept dummy per carat class (the first class is absorbed by the fit's
// global intercept) plus a within-class offset (carat - class lower bound),
// so the price surface is linear inside a class and free to jump at class
// boundaries. Categorical grades are one-hot against their first level.
// Locations are one-hot against a reserved OTHER bucket: any location not in
// the vocabulary encodes as all zeros, so prediction is total.
struct FeatureSchema {
  std::vector<std::string> locations;  // sorted vocabulary, OTHER excluded

  int dim() const;
  std::vector<std::string> names() const;
};

// Writes the encoded row for `a` into out[0 .. schema.dim()).
void encode(const DiamondAttributes& a, const FeatureSchema& schema, double* out);

struct LinearModel {
  double intercept = 0.0;
  std::vector<double> coef;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 12;
  int min_leaf = 20;
  double bag_fraction = 0.7;  // without-replacement subsample per tree
  int features_per_split = 0;  // 0 = ceil(sqrt(dim))
};

// Flattened binary regression tree. feature[i] < 0 marks a leaf whose
// prediction is value[i]; otherwise x[feature[i]] < threshold[i] goes left.
struct Tree {
  std::vector<std::int32_t> feature;
  std::vector<double> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> value;
};

struct ForestModel {
  ForestParams params;
  std::vector<Tree> trees;
};

// Baseline calibration: per-scheme group baselines of the ratio statistic
// plus the headline normalizer, all computed on the t0 snapshot at fit time
// so the baseline index point is exactly 1000.
struct GroupCalibration {
  std::vector<double> mean_base;
  std::vector<double> median_base;
};

struct Calibration {
  double mean_c0 = 1.0;
  double median_c0 = 1.0;
  std::array<double, kNumClasses> baseline_weights{};
  std::map<std::string, GroupCalibration> schemes;  // carat_class / shape / colour

  bool empty() const { return schemes.empty(); }
};

// A hedonic model frozen at the baseline date t0, plus its calibration.
struct BaselinePredictor {
  std::variant<LinearModel, ForestModel> model;
  FeatureSchema schema;
  Calibration calibration;
  Date t0;
  std::int64_t n_train = 0;
  double residual_sd = 0.0;

  bool is_linear() const { return std::holds_alternative<LinearModel>(model); }
  // Predicted price in USD; log-scale predictions are back-transformed.
  double predict(const DiamondAttributes& a) const;
  // Same, for a row already encoded against `schema` (bulk scoring path).
  double predict_encoded(const double* x) const;
};

// Stable identifier derived from the serialized model (used in outputs).
std::string model_id(const BaselinePredictor& p);

// OLS of log price on the encoded features with an explicit intercept.
// Aliased (rank-deficient) columns are dropped, not fatal; each drop is
// reported through `warnings`. Requires rows >= 10 x feature dimension.
BaselinePredictor fit_linear(const Snapshot& snapshot, std::vector<std::string>* warnings = nullptr,
                             Exec exec = Exec::parallel);

// Bagged regression trees on (features, log price). Per-tree work runs in
// parallel; each tree's bag and split draws come from its own counter
// stream, so results are identical to sequential execution.
BaselinePredictor fit_forest(const Snapshot& snapshot, const ForestParams& params,
                             std::uint64_t seed, Exec exec = Exec::parallel);

std::string save_model_json(const BaselinePredictor& p);
BaselinePredictor load_model_json(const std::string& text);

struct HoldoutError {
  double median = 0.0;
  double p90 = 0.0;
};

// Relative absolute prediction error |P - F| / P over a holdout snapshot.
HoldoutError holdout_relative_error(const BaselinePredictor& p, const Snapshot& holdout,
                                    Exec exec = Exec::parallel);

}  // namespace hci
