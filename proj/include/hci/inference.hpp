#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hci/index.hpp"

namespace hci {

// Analytic variance of the headline index: scale^2 * sum_g w_g^2 s_g^2 / n_g,
// where scale = 1000 / c0. Groups with fewer than two observations are
// excluded with a warning and the weights renormalized over the rest.
struct VarianceEstimate {
  double variance = 0.0;
  double se = 0.0;
  std::array<double, kNumClasses> group_contribution{};
  std::vector<std::string> warnings;
};

VarianceEstimate hci_variance(const GroupStats& stats, const WeightVector& weights,
                              const Calibration& calibration,
                              Statistic stat = Statistic::Mean);

struct CiResult {
  std::string method;  // normal | bootstrap | percentile_t
  double level = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double se = 0.0;  // analytic se (normal, percentile_t) or replicate sd (bootstrap)
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

CiResult normal_ci(double headline, const VarianceEstimate& variance, double level);

// Ratios bucketed by carat class, in record order within each group.
using GroupedRatios = std::array<std::vector<double>, kNumClasses>;
GroupedRatios group_ratio_values(const RatioSet& ratios);

constexpr int kMinBootstrapReplicates = 200;
constexpr int kDefaultBootstrapReplicates = 1000;

// Stratified within-group resampling; group sizes and weights stay fixed.
// Deterministic for a fixed seed regardless of execution mode.
CiResult bootstrap_ci(const GroupedRatios& groups, const WeightVector& weights,
                      const Calibration& calibration, Statistic stat, double level,
                      int replicates, std::uint64_t seed, Exec exec = Exec::parallel);

// Studentized bootstrap: pivot t* = (HCI* - HCI)/se*, interval
// [HCI - t*_{(1+level)/2} se, HCI - t*_{(1-level)/2} se].
CiResult percentile_t_ci(const GroupedRatios& groups, const WeightVector& weights,
                         const Calibration& calibration, Statistic stat, double level,
                         int replicates, std::uint64_t seed, Exec exec = Exec::parallel);

// Linear-interpolation quantile on an already sorted sample (R type 7).
double quantile_type7(const std::vector<double>& sorted, double p);

}  // namespace hci
