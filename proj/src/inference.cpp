#include "hci/inference.hpp"

#include <algorithm>
#include <cmath>

#include "hci/rng.hpp"

namespace hci {

namespace {

// Stream tag keeping bootstrap substreams disjoint from generator/tree streams.
constexpr std::uint64_t kBootstrapStream = 0x424F4F5400000000ull;

double scale_for(const Calibration& calibration, Statistic stat) {
  if (calibration.empty()) throw DataError("predictor has no baseline calibration");
  const double c0 = stat == Statistic::Mean ? calibration.mean_c0 : calibration.median_c0;
  if (!(c0 > 0.0)) throw DataError("calibration constant must be positive");
  return 1000.0 / c0;
}

// Renormalize weights over the groups passing `keep`; false entries get 0.
WeightVector renormalized(const WeightVector& weights, const std::array<bool, kNumClasses>& keep) {
  double wsum = 0.0;
  for (int g = 0; g < kNumClasses; ++g) {
    if (keep[static_cast<std::size_t>(g)]) wsum += weights[g];
  }
  if (!(wsum > 0.0)) throw DataError("no carat-class group is usable");
  WeightVector out{};
  for (int g = 0; g < kNumClasses; ++g) {
    out[g] = keep[static_cast<std::size_t>(g)] ? weights[g] / wsum : 0.0;
  }
  return out;
}

double mean_of(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s / static_cast<double>(n);
}

double sd_of(const double* v, std::size_t n, double mean) {
  if (n < 2) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v[i] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n - 1));
}

// Median with averaged middles; mutates the buffer.
double median_inplace(double* v, std::size_t n) {
  const std::size_t mid = n / 2;
  std::nth_element(v, v + mid, v + n);
  double med = v[mid];
  if (n % 2 == 0) {
    med = 0.5 * (med + *std::max_element(v, v + mid));
  }
  return med;
}

double stat_inplace(double* v, std::size_t n, Statistic stat) {
  return stat == Statistic::Mean ? mean_of(v, n) : median_inplace(v, n);
}

struct BootstrapSetup {
  WeightVector point_weights{};     // over non-empty groups
  WeightVector variance_weights{};  // over groups with n >= 2
  double scale = 0.0;
  double headline = 0.0;  // recomputed serially from the grouped values
  double se = 0.0;
  std::size_t max_group = 0;
  std::vector<std::string> warnings;
};

BootstrapSetup setup_bootstrap(const GroupedRatios& groups, const WeightVector& weights,
                               const Calibration& calibration, Statistic stat) {
  BootstrapSetup s;
  s.scale = scale_for(calibration, stat);
  std::array<bool, kNumClasses> nonempty{};
  std::array<bool, kNumClasses> usable{};
  for (int g = 0; g < kNumClasses; ++g) {
    const auto& v = groups[static_cast<std::size_t>(g)];
    nonempty[static_cast<std::size_t>(g)] = !v.empty();
    usable[static_cast<std::size_t>(g)] = v.size() >= 2;
    s.max_group = std::max(s.max_group, v.size());
    if (v.empty()) {
      s.warnings.push_back("group " + std::to_string(g + 1) +
                           " is empty; weight renormalized away");
    } else if (v.size() < 2) {
      s.warnings.push_back("group " + std::to_string(g + 1) +
                           " has fewer than two ratios; excluded from the variance");
    }
  }
  s.point_weights = renormalized(weights, nonempty);
  s.variance_weights = renormalized(weights, usable);

  double acc = 0.0;
  double var = 0.0;
  std::vector<double> scratch;
  for (int g = 0; g < kNumClasses; ++g) {
    const auto& v = groups[static_cast<std::size_t>(g)];
    if (v.empty()) continue;
    scratch.assign(v.begin(), v.end());
    acc += s.point_weights[g] * stat_inplace(scratch.data(), scratch.size(), stat);
    if (v.size() >= 2) {
      const double m = mean_of(v.data(), v.size());
      const double sd = sd_of(v.data(), v.size(), m);
      const double w = s.variance_weights[g];
      var += w * w * sd * sd / static_cast<double>(v.size());
    }
  }
  s.headline = s.scale * acc;
  s.se = s.scale * std::sqrt(var);
  return s;
}

struct Replicate {
  double headline = 0.0;
  double se = 0.0;
};

// One stratified resample: every group redrawn with replacement at its own size.
Replicate run_replicate(const GroupedRatios& groups, const BootstrapSetup& s, Statistic stat,
                        std::uint64_t seed, int b, std::vector<double>& scratch) {
  CounterRng rng(seed, kBootstrapStream + static_cast<std::uint64_t>(b));
  std::uint64_t ctr = 0;
  double acc = 0.0;
  double var = 0.0;
  for (int g = 0; g < kNumClasses; ++g) {
    const auto& v = groups[static_cast<std::size_t>(g)];
    const std::size_t n = v.size();
    if (n == 0) continue;
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      scratch[i] = v[rng.below(ctr++, n)];
    }
    const double m = mean_of(scratch.data(), n);
    if (n >= 2) {
      const double sd = sd_of(scratch.data(), n, m);
      const double w = s.variance_weights[g];
      var += w * w * sd * sd / static_cast<double>(n);
    }
    const double st = stat == Statistic::Mean ? m : median_inplace(scratch.data(), n);
    acc += s.point_weights[g] * st;
  }
  return {s.scale * acc, s.scale * std::sqrt(var)};
}

void check_ci_args(double level, int replicates) {
  if (!(level > 0.0 && level < 1.0)) throw DataError("confidence level must lie in (0, 1)");
  if (replicates < kMinBootstrapReplicates) {
    throw DataError("bootstrap needs at least " + std::to_string(kMinBootstrapReplicates) +
                    " replicates");
  }
}

}  // namespace

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("quantile probability must lie in [0, 1]");
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * p;
  const auto i = static_cast<std::size_t>(h);
  if (i + 1 >= n) return sorted[n - 1];
  const double g = h - static_cast<double>(i);
  return sorted[i] + g * (sorted[i + 1] - sorted[i]);
}

VarianceEstimate hci_variance(const GroupStats& stats, const WeightVector& weights,
                              const Calibration& calibration, Statistic stat) {
  const double scale = scale_for(calibration, stat);
  VarianceEstimate est;
  std::array<bool, kNumClasses> usable{};
  for (int g = 0; g < kNumClasses; ++g) {
    usable[static_cast<std::size_t>(g)] = stats.count[static_cast<std::size_t>(g)] >= 2;
    if (!usable[static_cast<std::size_t>(g)]) {
      est.warnings.push_back("group " + std::to_string(g + 1) +
                             " has fewer than two ratios; excluded from the variance");
    }
  }
  const WeightVector w = renormalized(weights, usable);
  for (int g = 0; g < kNumClasses; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    if (!usable[gi]) continue;
    const double sd = stats.sd[gi];
    est.group_contribution[gi] =
        scale * scale * w[g] * w[g] * sd * sd / static_cast<double>(stats.count[gi]);
    est.variance += est.group_contribution[gi];
  }
  est.se = std::sqrt(est.variance);
  return est;
}

CiResult normal_ci(double headline, const VarianceEstimate& variance, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DataError("confidence level must lie in (0, 1)");
  if (!(variance.variance >= 0.0)) throw DataError("variance must be non-negative");
  const double z = normal_quantile(0.5 * (1.0 + level));
  CiResult ci;
  ci.method = "normal";
  ci.level = level;
  ci.se = variance.se;
  ci.lower = headline - z * variance.se;
  ci.upper = headline + z * variance.se;
  ci.warnings = variance.warnings;
  return ci;
}

GroupedRatios group_ratio_values(const RatioSet& ratios) {
  GroupedRatios out;
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto g : ratios.carat_group) ++counts[static_cast<std::size_t>(g)];
  for (int g = 0; g < kNumClasses; ++g) {
    out[static_cast<std::size_t>(g)].reserve(counts[static_cast<std::size_t>(g)]);
  }
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    out[static_cast<std::size_t>(ratios.carat_group[k])].push_back(ratios.ratio[k]);
  }
  return out;
}

CiResult bootstrap_ci(const GroupedRatios& groups, const WeightVector& weights,
                      const Calibration& calibration, Statistic stat, double level,
                      int replicates, std::uint64_t seed, Exec exec) {
  check_ci_args(level, replicates);
  const BootstrapSetup s = setup_bootstrap(groups, weights, calibration, stat);
  std::vector<double> headlines(static_cast<std::size_t>(replicates));
  par::for_indices(static_cast<std::size_t>(replicates), exec, [&](std::size_t b) {
    std::vector<double> scratch;
    scratch.reserve(s.max_group);
    headlines[b] = run_replicate(groups, s, stat, seed, static_cast<int>(b), scratch).headline;
  });
  const double rep_mean = mean_of(headlines.data(), headlines.size());
  const double rep_sd = sd_of(headlines.data(), headlines.size(), rep_mean);
  std::sort(headlines.begin(), headlines.end());
  CiResult ci;
  ci.method = "bootstrap";
  ci.level = level;
  ci.lower = quantile_type7(headlines, 0.5 * (1.0 - level));
  ci.upper = quantile_type7(headlines, 0.5 * (1.0 + level));
  ci.se = rep_sd;
  ci.replicates = replicates;
  ci.seed = seed;
  ci.warnings = s.warnings;
  return ci;
}

CiResult percentile_t_ci(const GroupedRatios& groups, const WeightVector& weights,
                         const Calibration& calibration, Statistic stat, double level,
                         int replicates, std::uint64_t seed, Exec exec) {
  check_ci_args(level, replicates);
  const BootstrapSetup s = setup_bootstrap(groups, weights, calibration, stat);
  CiResult ci;
  ci.method = "percentile_t";
  ci.level = level;
  ci.se = s.se;
  ci.replicates = replicates;
  ci.seed = seed;
  ci.warnings = s.warnings;
  if (s.se == 0.0) {
    ci.lower = ci.upper = s.headline;
    ci.warnings.push_back("sample standard error is zero; interval degenerate");
    return ci;
  }
  std::vector<Replicate> reps(static_cast<std::size_t>(replicates));
  par::for_indices(static_cast<std::size_t>(replicates), exec, [&](std::size_t b) {
    std::vector<double> scratch;
    scratch.reserve(s.max_group);
    reps[b] = run_replicate(groups, s, stat, seed, static_cast<int>(b), scratch);
  });
  std::vector<double> pivots;
  pivots.reserve(reps.size());
  std::size_t dropped = 0;
  for (const auto& r : reps) {
    if (r.se > 0.0) {
      pivots.push_back((r.headline - s.headline) / r.se);
    } else {
      ++dropped;
    }
  }
  if (dropped > 0) {
    ci.warnings.push_back("dropped " + std::to_string(dropped) +
                          " replicates with zero bootstrap standard error");
  }
  if (pivots.empty()) throw DataError("all bootstrap replicates had zero standard error");
  std::sort(pivots.begin(), pivots.end());
  const double t_hi = quantile_type7(pivots, 0.5 * (1.0 + level));
  const double t_lo = quantile_type7(pivots, 0.5 * (1.0 - level));
  ci.lower = s.headline - t_hi * s.se;
  ci.upper = s.headline - t_lo * s.se;
  return ci;
}

}  // namespace hci
