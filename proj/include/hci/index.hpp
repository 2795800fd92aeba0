#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hci/domain.hpp"
#include "hci/parallel.hpp"
#include "hci/predictor.hpp"

namespace hci {

inline constexpr std::string_view kIndexCsvHeader =
    "date,headline,group_1_subindex,group_2_subindex,group_3_subindex,group_4_subindex,"
    "group_5_subindex,group_6_subindex,group_7_subindex,statistic,smoothing,model_id";

enum class Statistic { Mean, Median };
enum class WeightPolicy { PerSnapshot, Frozen };
enum class Scheme { CaratClass, Shape, Colour };

std::string_view to_string(Statistic s);
std::string_view to_string(WeightPolicy p);
std::string_view to_string(Scheme s);
Statistic statistic_from_string(const std::string& s);
WeightPolicy weight_policy_from_string(const std::string& s);
Scheme scheme_from_string(const std::string& s);

int scheme_group_count(Scheme s);
std::string scheme_group_label(Scheme s, int g);

// Per-record price/prediction ratios with the group codes of every scheme,
// so one scoring pass serves headline, sub-index, and bootstrap needs.
struct RatioSet {
  Date date;
  std::vector<double> ratio;
  std::vector<std::int32_t> carat_group;
  std::vector<std::int32_t> shape_group;
  std::vector<std::int32_t> colour_group;
  std::vector<std::uint32_t> record;

  std::size_t size() const { return ratio.size(); }
  const std::vector<std::int32_t>& groups(Scheme s) const;
};

RatioSet compute_ratios(const Snapshot& snapshot, const BaselinePredictor& predictor,
                        Exec exec = Exec::parallel);

// Per-group count, mean, sample sd and median of the ratios. Mean/sd come
// from the deterministic block reduction; the median of an even-sized group
// is the average of the two middle order statistics.
struct GroupStats {
  std::vector<std::size_t> count;
  std::vector<double> mean;
  std::vector<double> sd;      // NaN when count < 2
  std::vector<double> median;  // NaN when count == 0

  double stat(Statistic s, int g) const;
};

GroupStats group_stats(const RatioSet& ratios, Scheme scheme, Exec exec = Exec::parallel);

using WeightVector = std::array<double, kNumClasses>;

// Value-share weights per carat class; totals are exact cent sums.
WeightVector proportional_weights(const Snapshot& snapshot);
WeightVector proportional_weights_from_totals(const std::array<double, kNumClasses>& totals);
// Blend of value share and equal weight: (w_p + 1/7) / 2. Sums to 1.
WeightVector final_weights(const WeightVector& proportional);

// Computes the baseline group statistics, headline normalizers, and frozen
// weights on the t0 snapshot, so a later scoring of that same snapshot
// reproduces exactly 1000.
Calibration calibrate(const Snapshot& baseline, const BaselinePredictor& predictor,
                      Exec exec = Exec::parallel);

struct HciResult {
  double headline = 0.0;
  WeightVector weights_used{};
  std::vector<double> group_stat;      // statistic per group (NaN if empty)
  std::vector<std::string> warnings;
};

// headline = 1000 x (sum_g w_g stat_g) / c0. Empty groups are dropped and
// the remaining weights renormalized (with a warning).
HciResult compute_hci(const GroupStats& carat_stats, const WeightVector& weights,
                      const Calibration& calibration, Statistic stat);

// Per-group sub-indices 1000 x stat_g / base_g; NaN when the group is empty
// in either the baseline or the scored snapshot.
std::vector<double> sub_indices(const GroupStats& stats, const Calibration& calibration,
                                Scheme scheme, Statistic stat);

struct IndexPoint {
  Date date;
  double headline = 0.0;
  std::array<double, kNumClasses> subindex{};  // NaN when undefined
};

struct IndexSeries {
  std::vector<IndexPoint> points;
  Statistic statistic = Statistic::Mean;
  double smoothing_lambda = 0.0;  // 0 = unsmoothed
  std::string model_id;
  WeightPolicy policy = WeightPolicy::PerSnapshot;
  std::string splice_note;  // change-of-definition record, empty if none
};

IndexPoint score_snapshot(const Snapshot& snapshot, const BaselinePredictor& predictor,
                          Statistic stat, WeightPolicy policy,
                          std::vector<std::string>* warnings = nullptr,
                          Exec exec = Exec::parallel);

// EWMA with s_1 = x_1, s_t = lambda x_t + (1 - lambda) s_{t-1}, applied to
// the headline and each sub-index column; lambda in (0, 1].
IndexSeries smooth_series(const IndexSeries& series, double lambda);

// Joins `older` (up to and including link_date) with `newer` (after it),
// scaling `newer` so the two agree at the link point.
IndexSeries splice_series(const IndexSeries& older, const IndexSeries& newer, Date link_date);

struct AlignParams {
  double a = 0.0;
  double b = 1.0;
};

// Affine map a + b * other matching the index's mean/sd over the overlap.
// b keeps the external series' orientation (b > 0).
AlignParams align_series(const IndexSeries& target, const ExternalSeries& other);
ExternalSeries apply_alignment(const AlignParams& params, const ExternalSeries& other);

std::string index_series_to_csv(const IndexSeries& series);
std::string index_series_to_jsonl(const IndexSeries& series);
IndexSeries index_series_from_csv(std::string_view text);

// Long-format per-group series for any scheme.
struct SubIndexSeries {
  Scheme scheme = Scheme::CaratClass;
  Statistic statistic = Statistic::Mean;
  std::string model_id;
  std::vector<Date> dates;
  std::vector<std::vector<double>> values;  // [date][group], NaN when undefined
};

std::string sub_index_series_to_csv(const SubIndexSeries& series);

}  // namespace hci
