#include "hci/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace hci {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using nlohmann::json;

std::string format_fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string_view to_string(Statistic s) { return s == Statistic::Mean ? "mean" : "median"; }
std::string_view to_string(WeightPolicy p) {
  return p == WeightPolicy::PerSnapshot ? "per_snapshot" : "frozen";
}
std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::CaratClass: return "carat_class";
    case Scheme::Shape: return "shape";
    case Scheme::Colour: return "colour";
  }
  return "";
}

Statistic statistic_from_string(const std::string& s) {
  if (s == "mean") return Statistic::Mean;
  if (s == "median") return Statistic::Median;
  throw DataError("unknown statistic '" + s + "' (expected mean|median)");
}

WeightPolicy weight_policy_from_string(const std::string& s) {
  if (s == "per_snapshot") return WeightPolicy::PerSnapshot;
  if (s == "frozen") return WeightPolicy::Frozen;
  throw DataError("unknown weighting '" + s + "' (expected per_snapshot|frozen)");
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "carat_class") return Scheme::CaratClass;
  if (s == "shape") return Scheme::Shape;
  if (s == "colour") return Scheme::Colour;
  throw DataError("unknown scheme '" + s + "' (expected carat_class|shape|colour)");
}

int scheme_group_count(Scheme s) {
  switch (s) {
    case Scheme::CaratClass: return kNumClasses;
    case Scheme::Shape: return kNumShapes;
    case Scheme::Colour: return kNumColours;
  }
  return 0;
}

std::string scheme_group_label(Scheme s, int g) {
  switch (s) {
    case Scheme::CaratClass: return "class_" + std::to_string(g + 1);
    case Scheme::Shape: return std::string(to_string(static_cast<Shape>(g)));
    case Scheme::Colour: return std::string(to_string(static_cast<Colour>(g)));
  }
  return "";
}

const std::vector<std::int32_t>& RatioSet::groups(Scheme s) const {
  switch (s) {
    case Scheme::CaratClass: return carat_group;
    case Scheme::Shape: return shape_group;
    case Scheme::Colour: return colour_group;
  }
  return carat_group;
}

RatioSet compute_ratios(const Snapshot& snapshot, const BaselinePredictor& predictor,
                        Exec exec) {
  const std::size_t n = snapshot.records.size();
  if (n == 0) throw DataError("cannot score an empty snapshot");
  RatioSet out;
  out.date = snapshot.date;
  out.ratio.resize(n);
  out.carat_group.resize(n);
  out.shape_group.resize(n);
  out.colour_group.resize(n);
  out.record.resize(n);
  const int d = predictor.schema.dim();
  par::for_blocks(n, exec, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& r = snapshot.records[k];
      encode(r.attrs, predictor.schema, x.data());
      const double f = predictor.predict_encoded(x.data());
      out.ratio[k] = price_usd(r.price_cents) / f;
      out.carat_group[k] = carat_class(r.attrs.carat);
      out.shape_group[k] = static_cast<std::int32_t>(r.attrs.shape);
      out.colour_group[k] = static_cast<std::int32_t>(r.attrs.colour);
      out.record[k] = static_cast<std::uint32_t>(k);
    }
  });
  return out;
}

GroupStats group_stats(const RatioSet& ratios, Scheme scheme, Exec exec) {
  const int ng = scheme_group_count(scheme);
  const auto& grp = ratios.groups(scheme);
  const std::size_t n = ratios.size();

  struct Acc {
    std::vector<std::size_t> count;
    std::vector<double> sum;
    std::vector<double> sumsq;
  };
  Acc init{std::vector<std::size_t>(static_cast<std::size_t>(ng), 0),
           std::vector<double>(static_cast<std::size_t>(ng), 0.0),
           std::vector<double>(static_cast<std::size_t>(ng), 0.0)};
  const Acc acc = par::reduce_blocks(
      n, exec, init,
      [&](std::size_t lo, std::size_t hi) {
        Acc local{std::vector<std::size_t>(static_cast<std::size_t>(ng), 0),
                  std::vector<double>(static_cast<std::size_t>(ng), 0.0),
                  std::vector<double>(static_cast<std::size_t>(ng), 0.0)};
        for (std::size_t k = lo; k < hi; ++k) {
          const auto g = static_cast<std::size_t>(grp[k]);
          const double v = ratios.ratio[k];
          ++local.count[g];
          local.sum[g] += v;
          local.sumsq[g] += v * v;
        }
        return local;
      },
      [ng](Acc& a, const Acc& b) {
        for (int g = 0; g < ng; ++g) {
          a.count[static_cast<std::size_t>(g)] += b.count[static_cast<std::size_t>(g)];
          a.sum[static_cast<std::size_t>(g)] += b.sum[static_cast<std::size_t>(g)];
          a.sumsq[static_cast<std::size_t>(g)] += b.sumsq[static_cast<std::size_t>(g)];
        }
      });

  GroupStats stats;
  stats.count = acc.count;
  stats.mean.assign(static_cast<std::size_t>(ng), kNaN);
  stats.sd.assign(static_cast<std::size_t>(ng), kNaN);
  stats.median.assign(static_cast<std::size_t>(ng), kNaN);
  for (int g = 0; g < ng; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    const auto cnt = acc.count[gi];
    if (cnt == 0) continue;
    const double mean = acc.sum[gi] / static_cast<double>(cnt);
    stats.mean[gi] = mean;
    if (cnt >= 2) {
      const double ss = acc.sumsq[gi] - acc.sum[gi] * mean;
      stats.sd[gi] = std::sqrt(std::max(0.0, ss / static_cast<double>(cnt - 1)));
    }
  }

  // Medians: per-group gather in record order, then order statistics.
  std::vector<std::vector<double>> buckets(static_cast<std::size_t>(ng));
  for (int g = 0; g < ng; ++g) buckets[static_cast<std::size_t>(g)].reserve(acc.count[static_cast<std::size_t>(g)]);
  for (std::size_t k = 0; k < n; ++k) {
    buckets[static_cast<std::size_t>(grp[k])].push_back(ratios.ratio[k]);
  }
  for (int g = 0; g < ng; ++g) {
    auto& b = buckets[static_cast<std::size_t>(g)];
    if (b.empty()) continue;
    const std::size_t mid = b.size() / 2;
    std::nth_element(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(mid), b.end());
    double med = b[mid];
    if (b.size() % 2 == 0) {
      const double lowmid = *std::max_element(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(mid));
      med = 0.5 * (lowmid + med);
    }
    stats.median[static_cast<std::size_t>(g)] = med;
  }
  return stats;
}

double GroupStats::stat(Statistic s, int g) const {
  const auto gi = static_cast<std::size_t>(g);
  return s == Statistic::Mean ? mean[gi] : median[gi];
}

WeightVector proportional_weights(const Snapshot& snapshot) {
  std::array<std::int64_t, kNumClasses> totals{};
  for (const auto& r : snapshot.records) {
    totals[carat_class(r.attrs.carat)] += r.price_cents;
  }
  std::array<double, kNumClasses> usd{};
  for (int g = 0; g < kNumClasses; ++g) usd[g] = static_cast<double>(totals[g]) / 100.0;
  return proportional_weights_from_totals(usd);
}

WeightVector proportional_weights_from_totals(const std::array<double, kNumClasses>& totals) {
  double grand = 0.0;
  for (const double t : totals) {
    if (t < 0.0) throw DataError("negative group total");
    grand += t;
  }
  if (!(grand > 0.0)) throw DataError("group totals sum to zero");
  WeightVector w{};
  for (int g = 0; g < kNumClasses; ++g) w[g] = totals[g] / grand;
  return w;
}

WeightVector final_weights(const WeightVector& proportional) {
  WeightVector w{};
  for (int g = 0; g < kNumClasses; ++g) {
    w[g] = (proportional[g] + 1.0 / kNumClasses) / 2.0;
  }
  return w;
}

namespace {

// Weighted sum of the group statistic over non-empty groups, renormalizing
// the weights when groups are missing. Used identically at calibration and
// scoring time so the baseline reproduces exactly.
double weighted_stat_sum(const GroupStats& stats, const WeightVector& weights, Statistic stat,
                         WeightVector* used, std::vector<std::string>* warnings) {
  double wsum = 0.0;
  for (int g = 0; g < kNumClasses; ++g) {
    if (stats.count[static_cast<std::size_t>(g)] > 0) {
      wsum += weights[g];
    } else if (warnings != nullptr) {
      warnings->push_back("group " + std::to_string(g + 1) +
                          " is empty; weight renormalized away");
    }
  }
  if (!(wsum > 0.0)) throw DataError("all carat-class groups are empty");
  double acc = 0.0;
  for (int g = 0; g < kNumClasses; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    const double w = stats.count[gi] > 0 ? weights[g] / wsum : 0.0;
    if (used != nullptr) (*used)[g] = w;
    if (stats.count[gi] > 0) acc += w * stats.stat(stat, g);
  }
  return acc;
}

}  // namespace

Calibration calibrate(const Snapshot& baseline, const BaselinePredictor& predictor, Exec exec) {
  const RatioSet ratios = compute_ratios(baseline, predictor, exec);
  Calibration calib;
  calib.baseline_weights = final_weights(proportional_weights(baseline));
  for (const Scheme scheme : {Scheme::CaratClass, Scheme::Shape, Scheme::Colour}) {
    const GroupStats stats = group_stats(ratios, scheme, exec);
    GroupCalibration gc;
    gc.mean_base = stats.mean;
    gc.median_base = stats.median;
    calib.schemes[std::string(to_string(scheme))] = std::move(gc);
    if (scheme == Scheme::CaratClass) {
      calib.mean_c0 = weighted_stat_sum(stats, calib.baseline_weights, Statistic::Mean,
                                        nullptr, nullptr);
      calib.median_c0 = weighted_stat_sum(stats, calib.baseline_weights, Statistic::Median,
                                          nullptr, nullptr);
    }
  }
  return calib;
}

HciResult compute_hci(const GroupStats& carat_stats, const WeightVector& weights,
                      const Calibration& calibration, Statistic stat) {
  if (calibration.empty()) throw DataError("predictor has no baseline calibration");
  HciResult res;
  const double c0 = stat == Statistic::Mean ? calibration.mean_c0 : calibration.median_c0;
  if (!(c0 > 0.0)) throw DataError("calibration constant must be positive");
  const double s =
      weighted_stat_sum(carat_stats, weights, stat, &res.weights_used, &res.warnings);
  res.headline = 1000.0 * s / c0;
  res.group_stat.resize(kNumClasses);
  for (int g = 0; g < kNumClasses; ++g) {
    res.group_stat[static_cast<std::size_t>(g)] = carat_stats.stat(stat, g);
  }
  return res;
}

std::vector<double> sub_indices(const GroupStats& stats, const Calibration& calibration,
                                Scheme scheme, Statistic stat) {
  const auto it = calibration.schemes.find(std::string(to_string(scheme)));
  if (it == calibration.schemes.end()) {
    throw DataError("calibration is missing scheme '" + std::string(to_string(scheme)) + "'");
  }
  const auto& base = stat == Statistic::Mean ? it->second.mean_base : it->second.median_base;
  const int ng = scheme_group_count(scheme);
  if (base.size() != static_cast<std::size_t>(ng)) {
    throw DataError("calibration group count mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(ng), kNaN);
  for (int g = 0; g < ng; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    const double b = base[gi];
    const double v = stats.stat(stat, g);
    if (stats.count[gi] > 0 && std::isfinite(b) && b > 0.0 && std::isfinite(v)) {
      out[gi] = 1000.0 * v / b;
    }
  }
  return out;
}

IndexPoint score_snapshot(const Snapshot& snapshot, const BaselinePredictor& predictor,
                          Statistic stat, WeightPolicy policy,
                          std::vector<std::string>* warnings, Exec exec) {
  const RatioSet ratios = compute_ratios(snapshot, predictor, exec);
  const GroupStats stats = group_stats(ratios, Scheme::CaratClass, exec);
  const WeightVector weights = policy == WeightPolicy::Frozen
                                   ? predictor.calibration.baseline_weights
                                   : final_weights(proportional_weights(snapshot));
  HciResult hci = compute_hci(stats, weights, predictor.calibration, stat);
  if (warnings != nullptr) {
    warnings->insert(warnings->end(), hci.warnings.begin(), hci.warnings.end());
  }
  IndexPoint pt;
  pt.date = snapshot.date;
  pt.headline = hci.headline;
  const auto subs = sub_indices(stats, predictor.calibration, Scheme::CaratClass, stat);
  for (int g = 0; g < kNumClasses; ++g) pt.subindex[g] = subs[static_cast<std::size_t>(g)];
  return pt;
}

IndexSeries smooth_series(const IndexSeries& series, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DataError("smoothing lambda must lie in (0, 1]");
  IndexSeries out = series;
  out.smoothing_lambda = lambda;
  double s_head = 0.0;
  std::array<double, kNumClasses> s_sub{};
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    auto& pt = out.points[i];
    if (i == 0) {
      s_head = pt.headline;
      s_sub = pt.subindex;
    } else {
      s_head = lambda * pt.headline + (1.0 - lambda) * s_head;
      for (int g = 0; g < kNumClasses; ++g) {
        s_sub[g] = lambda * pt.subindex[g] + (1.0 - lambda) * s_sub[g];
      }
    }
    pt.headline = s_head;
    pt.subindex = s_sub;
  }
  return out;
}

IndexSeries splice_series(const IndexSeries& older, const IndexSeries& newer, Date link_date) {
  const auto find_point = [](const IndexSeries& s, Date d) -> const IndexPoint* {
    for (const auto& p : s.points) {
      if (p.date == d) return &p;
    }
    return nullptr;
  };
  const IndexPoint* old_link = find_point(older, link_date);
  const IndexPoint* new_link = find_point(newer, link_date);
  if (old_link == nullptr || new_link == nullptr) {
    throw DataError("link date " + link_date.iso() + " must appear in both series");
  }
  if (!(new_link->headline != 0.0)) throw DataError("link headline must be non-zero");
  const double factor = old_link->headline / new_link->headline;
  std::array<double, kNumClasses> sub_factor{};
  for (int g = 0; g < kNumClasses; ++g) {
    sub_factor[g] = old_link->subindex[g] / new_link->subindex[g];  // NaN propagates
  }
  IndexSeries out = newer;
  out.points.clear();
  for (const auto& p : older.points) {
    if (p.date <= link_date) out.points.push_back(p);
  }
  for (const auto& p : newer.points) {
    if (p.date > link_date) {
      IndexPoint q = p;
      q.headline *= factor;
      for (int g = 0; g < kNumClasses; ++g) q.subindex[g] *= sub_factor[g];
      out.points.push_back(q);
    }
  }
  out.splice_note = "spliced at " + link_date.iso() + " (factor " + format_double(factor) + ")";
  out.model_id = older.model_id == newer.model_id ? newer.model_id
                                                  : older.model_id + "+" + newer.model_id;
  return out;
}

AlignParams align_series(const IndexSeries& target, const ExternalSeries& other) {
  std::vector<double> t, o;
  for (const auto& p : target.points) {
    for (const auto& [d, v] : other.points) {
      if (d == p.date) {
        t.push_back(p.headline);
        o.push_back(v);
      }
    }
  }
  if (t.size() < 2) throw DataError("alignment overlap must contain at least two dates");
  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double mt = mean_of(t);
  const double mo = mean_of(o);
  double st = 0.0, so = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += (t[i] - mt) * (t[i] - mt);
    so += (o[i] - mo) * (o[i] - mo);
  }
  if (!(so > 0.0)) throw DataError("external series is constant over the overlap");
  AlignParams params;
  params.b = std::sqrt(st / so);
  params.a = mt - params.b * mo;
  return params;
}

ExternalSeries apply_alignment(const AlignParams& params, const ExternalSeries& other) {
  ExternalSeries out = other;
  for (auto& [d, v] : out.points) v = params.a + params.b * v;
  return out;
}

namespace {

std::string smoothing_field(double lambda) {
  return lambda == 0.0 ? std::string() : format_double(lambda);
}

}  // namespace

std::string index_series_to_csv(const IndexSeries& series) {
  std::ostringstream os;
  os << kIndexCsvHeader << '\n';
  for (const auto& p : series.points) {
    os << p.date.iso() << ',' << format_fixed3(p.headline);
    for (int g = 0; g < kNumClasses; ++g) {
      os << ',';
      if (std::isfinite(p.subindex[g])) os << format_fixed3(p.subindex[g]);
    }
    os << ',' << to_string(series.statistic) << ',' << smoothing_field(series.smoothing_lambda)
       << ',' << series.model_id << '\n';
  }
  return os.str();
}

std::string index_series_to_jsonl(const IndexSeries& series) {
  std::ostringstream os;
  for (const auto& p : series.points) {
    json j;
    j["date"] = p.date.iso();
    j["headline"] = p.headline;
    json subs = json::array();
    for (int g = 0; g < kNumClasses; ++g) {
      if (std::isfinite(p.subindex[g])) {
        subs.push_back(p.subindex[g]);
      } else {
        subs.push_back(nullptr);
      }
    }
    j["subindices"] = subs;
    j["statistic"] = std::string(to_string(series.statistic));
    if (series.smoothing_lambda != 0.0) {
      j["smoothing"] = series.smoothing_lambda;
    } else {
      j["smoothing"] = nullptr;
    }
    j["model_id"] = series.model_id;
    os << j.dump() << '\n';
  }
  return os.str();
}

IndexSeries index_series_from_csv(std::string_view text) {
  IndexSeries series;
  std::size_t pos = 0;
  bool saw_header = false;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++lineno;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kIndexCsvHeader) throw DataError("unexpected index CSV header");
      saw_header = true;
      continue;
    }
    std::vector<std::string> f;
    std::size_t start = 0;
    const std::string sline(line);
    while (true) {
      const std::size_t c = sline.find(',', start);
      if (c == std::string::npos) {
        f.push_back(sline.substr(start));
        break;
      }
      f.push_back(sline.substr(start, c - start));
      start = c + 1;
    }
    if (f.size() != 12) {
      throw DataError("index CSV line " + std::to_string(lineno) + ": wrong field count");
    }
    IndexPoint p;
    p.date = Date::parse(f[0]);
    p.headline = std::stod(f[1]);
    for (int g = 0; g < kNumClasses; ++g) {
      const auto& field = f[static_cast<std::size_t>(2 + g)];
      p.subindex[g] = field.empty() ? kNaN : std::stod(field);
    }
    series.statistic = statistic_from_string(f[9]);
    series.smoothing_lambda = f[10].empty() ? 0.0 : std::stod(f[10]);
    series.model_id = f[11];
    series.points.push_back(p);
  }
  if (!saw_header) throw DataError("empty index CSV");
  return series;
}

std::string sub_index_series_to_csv(const SubIndexSeries& series) {
  std::ostringstream os;
  os << "date,scheme,group,subindex,statistic,model_id\n";
  const int ng = scheme_group_count(series.scheme);
  for (std::size_t i = 0; i < series.dates.size(); ++i) {
    for (int g = 0; g < ng; ++g) {
      const double v = series.values[i][static_cast<std::size_t>(g)];
      os << series.dates[i].iso() << ',' << to_string(series.scheme) << ','
         << scheme_group_label(series.scheme, g) << ',';
      if (std::isfinite(v)) os << format_fixed3(v);
      os << ',' << to_string(series.statistic) << ',' << series.model_id << '\n';
    }
  }
  return os.str();
}

}  // namespace hci
