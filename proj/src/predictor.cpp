#include "hci/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

#include "hci/rng.hpp"

namespace hci {

namespace {

using nlohmann::json;

// class dummies (2..7) + per-class carat offsets + one-hot grades/shape.
constexpr int kBaseDim = 6 + 7 + 9 + 8 + 4 + 4 + 4 + 4 + 9;

constexpr int kColourBase = 13;
constexpr int kClarityBase = 22;
constexpr int kCutBase = 30;
constexpr int kPolishBase = 34;
constexpr int kSymmetryBase = 38;
constexpr int kFluorBase = 42;
constexpr int kShapeBase = 46;

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

double log_price(const PricedDiamond& r) { return std::log(price_usd(r.price_cents)); }

}  // namespace

int FeatureSchema::dim() const { return kBaseDim + static_cast<int>(locations.size()); }

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(dim()));
  for (int g = 2; g <= kNumClasses; ++g) out.push_back("class_" + std::to_string(g));
  for (int g = 1; g <= kNumClasses; ++g) out.push_back("carat_in_class_" + std::to_string(g));
  for (int i = 1; i < kNumColours; ++i) {
    out.push_back("colour_" + std::string(to_string(static_cast<Colour>(i))));
  }
  for (int i = 1; i < kNumClarities; ++i) {
    out.push_back("clarity_" + std::string(to_string(static_cast<Clarity>(i))));
  }
  for (const char* grade : {"cut_", "polish_", "symmetry_"}) {
    for (int i = 1; i < kNumGrade5; ++i) {
      out.push_back(grade + std::string(to_string(static_cast<Grade5>(i))));
    }
  }
  for (int i = 1; i < kNumFluorescence; ++i) {
    out.push_back("fluorescence_" + std::string(to_string(static_cast<Fluorescence>(i))));
  }
  for (int i = 1; i < kNumShapes; ++i) {
    out.push_back("shape_" + std::string(to_string(static_cast<Shape>(i))));
  }
  for (const auto& loc : locations) out.push_back("loc_" + loc);
  return out;
}

void encode(const DiamondAttributes& a, const FeatureSchema& schema, double* out) {
  std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(schema.dim()));
  const int g = carat_class(a.carat);
  if (g >= 1) out[g - 1] = 1.0;
  out[6 + g] = a.carat - kClassLower[g];
  if (a.colour != Colour::D) out[kColourBase + static_cast<int>(a.colour) - 1] = 1.0;
  if (a.clarity != Clarity::FL) out[kClarityBase + static_cast<int>(a.clarity) - 1] = 1.0;
  if (a.cut != Grade5::EX) out[kCutBase + static_cast<int>(a.cut) - 1] = 1.0;
  if (a.polish != Grade5::EX) out[kPolishBase + static_cast<int>(a.polish) - 1] = 1.0;
  if (a.symmetry != Grade5::EX) out[kSymmetryBase + static_cast<int>(a.symmetry) - 1] = 1.0;
  if (a.fluorescence != Fluorescence::NON) {
    out[kFluorBase + static_cast<int>(a.fluorescence) - 1] = 1.0;
  }
  if (a.shape != Shape::Round) out[kShapeBase + static_cast<int>(a.shape) - 1] = 1.0;
  const auto it = std::lower_bound(schema.locations.begin(), schema.locations.end(), a.location);
  if (it != schema.locations.end() && *it == a.location) {
    out[kBaseDim + static_cast<int>(it - schema.locations.begin())] = 1.0;
  }
}

namespace {

FeatureSchema schema_from_snapshot(const Snapshot& snapshot) {
  std::set<std::string> locs;
  for (const auto& r : snapshot.records) locs.insert(r.attrs.location);
  locs.erase("OTHER");  // reserved bucket: always the all-zero encoding
  FeatureSchema schema;
  schema.locations.assign(locs.begin(), locs.end());
  return schema;
}

double linear_raw(const LinearModel& m, const double* x, int dim) {
  double acc = m.intercept;
  for (int i = 0; i < dim; ++i) acc += m.coef[static_cast<std::size_t>(i)] * x[i];
  return acc;
}

double tree_raw(const Tree& t, const double* x) {
  int node = 0;
  while (t.feature[static_cast<std::size_t>(node)] >= 0) {
    const auto f = static_cast<std::size_t>(t.feature[static_cast<std::size_t>(node)]);
    node = x[f] < t.threshold[static_cast<std::size_t>(node)]
               ? t.left[static_cast<std::size_t>(node)]
               : t.right[static_cast<std::size_t>(node)];
  }
  return t.value[static_cast<std::size_t>(node)];
}

}  // namespace

double BaselinePredictor::predict(const DiamondAttributes& a) const {
  std::vector<double> x(static_cast<std::size_t>(schema.dim()));
  encode(a, schema, x.data());
  return predict_encoded(x.data());
}

double BaselinePredictor::predict_encoded(const double* x) const {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    return std::exp(linear_raw(*lin, x, schema.dim()));
  }
  const auto& forest = std::get<ForestModel>(model);
  double acc = 0.0;
  for (const auto& t : forest.trees) acc += tree_raw(t, x);
  return std::exp(acc / static_cast<double>(forest.trees.size()));
}

BaselinePredictor fit_linear(const Snapshot& snapshot, std::vector<std::string>* warnings,
                             Exec exec) {
  const std::size_t n = snapshot.records.size();
  FeatureSchema schema = schema_from_snapshot(snapshot);
  const int d = schema.dim();
  const int cols = d + 1;  // explicit intercept in column 0
  if (n < 10 * static_cast<std::size_t>(d)) {
    throw DataError("linear fit needs at least " + std::to_string(10 * d) + " rows, got " +
                    std::to_string(n));
  }

  struct Gram {
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
  };
  Gram init{Eigen::MatrixXd::Zero(cols, cols), Eigen::VectorXd::Zero(cols)};
  Gram gram = par::reduce_blocks(
      n, exec, init,
      [&](std::size_t lo, std::size_t hi) {
        Gram local{Eigen::MatrixXd::Zero(cols, cols), Eigen::VectorXd::Zero(cols)};
        Eigen::VectorXd x(cols);
        for (std::size_t k = lo; k < hi; ++k) {
          x[0] = 1.0;
          encode(snapshot.records[k].attrs, schema, x.data() + 1);
          local.xtx.selfadjointView<Eigen::Lower>().rankUpdate(x);
          local.xty += log_price(snapshot.records[k]) * x;
        }
        return local;
      },
      [](Gram& acc, const Gram& part) {
        acc.xtx += part.xtx;
        acc.xty += part.xty;
      });
  gram.xtx = gram.xtx.selfadjointView<Eigen::Lower>();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram.xtx);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  if (rank < cols && warnings != nullptr) {
    const auto names = schema.names();
    const auto& perm = qr.colsPermutation().indices();
    for (int i = rank; i < cols; ++i) {
      const int col = perm[i];
      warnings->push_back("dropped aliased column '" +
                          (col == 0 ? std::string("intercept") : names[col - 1]) + "'");
    }
  }
  const Eigen::VectorXd beta = qr.solve(gram.xty);

  BaselinePredictor p;
  LinearModel lin;
  lin.intercept = beta[0];
  lin.coef.assign(beta.data() + 1, beta.data() + cols);
  const double sse = par::transform_sum(n, exec, [&](std::size_t k) {
    std::vector<double> x(static_cast<std::size_t>(d));
    encode(snapshot.records[k].attrs, schema, x.data());
    const double r = log_price(snapshot.records[k]) - linear_raw(lin, x.data(), d);
    return r * r;
  });
  p.model = std::move(lin);
  p.schema = std::move(schema);
  p.t0 = snapshot.date;
  p.n_train = static_cast<std::int64_t>(n);
  p.residual_sd = std::sqrt(sse / static_cast<double>(n > static_cast<std::size_t>(rank)
                                                          ? n - static_cast<std::size_t>(rank)
                                                          : 1));
  return p;
}

namespace {

struct TreeBuilder {
  const std::vector<double>& xmat;  // row-major n x d
  const std::vector<double>& y;
  int d;
  int m;  // candidate features per split
  const ForestParams& params;
  const CounterRng& rng;
  std::uint64_t ctr = 0;
  Tree tree;

  double draw_u() { return rng.uniform(ctr++); }
  std::uint64_t draw_below(std::uint64_t n) { return rng.below(ctr++, n); }

  int build(std::vector<std::uint32_t>& idx, std::size_t lo, std::size_t hi, int depth) {
    const std::size_t size = hi - lo;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double v = y[idx[i]];
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(size);
    const double sse = sumsq - sum * mean;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    if (depth < params.max_depth && size >= 2 * static_cast<std::size_t>(params.min_leaf)) {
      // Candidate features: m distinct indices, examined in ascending order
      // so equal gains resolve to the lowest feature index.
      std::vector<int> feats(static_cast<std::size_t>(d));
      std::iota(feats.begin(), feats.end(), 0);
      for (int i = 0; i < m; ++i) {
        const auto j = static_cast<std::size_t>(i) +
                       static_cast<std::size_t>(draw_below(static_cast<std::uint64_t>(d - i)));
        std::swap(feats[static_cast<std::size_t>(i)], feats[j]);
      }
      feats.resize(static_cast<std::size_t>(m));
      std::sort(feats.begin(), feats.end());

      std::vector<std::pair<double, double>> vals(size);
      for (const int f : feats) {
        for (std::size_t i = 0; i < size; ++i) {
          const std::uint32_t r = idx[lo + i];
          vals[i] = {xmat[static_cast<std::size_t>(r) * static_cast<std::size_t>(d) +
                          static_cast<std::size_t>(f)],
                     y[r]};
        }
        std::sort(vals.begin(), vals.end());
        double lsum = 0.0, lsumsq = 0.0;
        for (std::size_t i = 0; i + 1 < size; ++i) {
          lsum += vals[i].second;
          lsumsq += vals[i].second * vals[i].second;
          if (vals[i].first == vals[i + 1].first) continue;
          const std::size_t nl = i + 1;
          const std::size_t nr = size - nl;
          if (nl < static_cast<std::size_t>(params.min_leaf) ||
              nr < static_cast<std::size_t>(params.min_leaf)) {
            continue;
          }
          const double rsum = sum - lsum;
          const double rsumsq = sumsq - lsumsq;
          const double sse_l = lsumsq - lsum * lsum / static_cast<double>(nl);
          const double sse_r = rsumsq - rsum * rsum / static_cast<double>(nr);
          const double gain = sse - sse_l - sse_r;
          const double threshold = 0.5 * (vals[i].first + vals[i + 1].first);
          const bool better =
              gain > best_gain ||
              (gain == best_gain && best_feature >= 0 &&
               (f < best_feature || (f == best_feature && threshold < best_threshold)));
          if (better) {
            best_gain = gain;
            best_feature = f;
            best_threshold = threshold;
          }
        }
      }
    }

    const int node = static_cast<int>(tree.feature.size());
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.value.push_back(mean);
    if (best_feature < 0 || best_gain <= 0.0) return node;

    const auto mid_it = std::stable_partition(
        idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(hi),
        [&](std::uint32_t r) {
          return xmat[static_cast<std::size_t>(r) * static_cast<std::size_t>(d) +
                      static_cast<std::size_t>(best_feature)] < best_threshold;
        });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    tree.feature[static_cast<std::size_t>(node)] = best_feature;
    tree.threshold[static_cast<std::size_t>(node)] = best_threshold;
    tree.left[static_cast<std::size_t>(node)] = build(idx, lo, mid, depth + 1);
    tree.right[static_cast<std::size_t>(node)] = build(idx, mid, hi, depth + 1);
    return node;
  }
};

}  // namespace

BaselinePredictor fit_forest(const Snapshot& snapshot, const ForestParams& params,
                             std::uint64_t seed, Exec exec) {
  if (params.n_trees < 1) throw DataError("forest needs at least one tree");
  if (params.max_depth < 0) throw DataError("max_depth must be non-negative");
  if (params.min_leaf < 1) throw DataError("min_leaf must be positive");
  if (!(params.bag_fraction > 0.0 && params.bag_fraction <= 1.0)) {
    throw DataError("bag_fraction must lie in (0, 1]");
  }
  const std::size_t n = snapshot.records.size();
  if (n == 0) throw DataError("forest fit on empty snapshot");
  FeatureSchema schema = schema_from_snapshot(snapshot);
  const int d = schema.dim();

  std::vector<double> xmat(n * static_cast<std::size_t>(d));
  std::vector<double> yvec(n);
  par::for_blocks(n, exec, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      encode(snapshot.records[k].attrs, schema, xmat.data() + k * static_cast<std::size_t>(d));
      yvec[k] = log_price(snapshot.records[k]);
    }
  });

  const int m = params.features_per_split > 0
                    ? std::min(params.features_per_split, d)
                    : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
  const auto bag_size = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(n),
                       std::ceil(params.bag_fraction * static_cast<double>(n))));

  ForestModel forest;
  forest.params = params;
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  par::for_indices(static_cast<std::size_t>(params.n_trees), exec, [&](std::size_t t) {
    const CounterRng rng(seed, t);
    TreeBuilder builder{xmat, yvec, d, m, params, rng, {}, {}};
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    if (bag_size < n) {
      for (std::size_t i = 0; i < bag_size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(builder.draw_below(
                                      static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(bag_size);
    }
    builder.build(idx, 0, idx.size(), 0);
    forest.trees[t] = std::move(builder.tree);
  });

  BaselinePredictor p;
  p.model = std::move(forest);
  p.schema = std::move(schema);
  p.t0 = snapshot.date;
  p.n_train = static_cast<std::int64_t>(n);
  const auto& fm = std::get<ForestModel>(p.model);
  const double sse = par::transform_sum(n, exec, [&](std::size_t k) {
    double acc = 0.0;
    for (const auto& t : fm.trees) {
      acc += tree_raw(t, xmat.data() + k * static_cast<std::size_t>(d));
    }
    const double r = yvec[k] - acc / static_cast<double>(fm.trees.size());
    return r * r;
  });
  p.residual_sd = std::sqrt(sse / static_cast<double>(n));
  return p;
}

namespace {

json calibration_to_json(const Calibration& c) {
  json j;
  j["mean_c0"] = c.mean_c0;
  j["median_c0"] = c.median_c0;
  j["baseline_weights"] = c.baseline_weights;
  json schemes = json::object();
  for (const auto& [name, gc] : c.schemes) {
    schemes[name] = {{"mean_base", gc.mean_base}, {"median_base", gc.median_base}};
  }
  j["schemes"] = schemes;
  return j;
}

Calibration calibration_from_json(const json& j) {
  Calibration c;
  c.mean_c0 = j.at("mean_c0").get<double>();
  c.median_c0 = j.at("median_c0").get<double>();
  const auto& bw = j.at("baseline_weights");
  for (int g = 0; g < kNumClasses; ++g) c.baseline_weights[g] = bw.at(g).get<double>();
  for (const auto& [name, gc] : j.at("schemes").items()) {
    GroupCalibration g;
    g.mean_base = gc.at("mean_base").get<std::vector<double>>();
    g.median_base = gc.at("median_base").get<std::vector<double>>();
    c.schemes[name] = std::move(g);
  }
  return c;
}

}  // namespace

std::string save_model_json(const BaselinePredictor& p) {
  json j;
  j["schema_version"] = std::string(kModelSchemaVersion);
  j["kind"] = p.is_linear() ? "linear" : "forest";
  j["vocabulary"] = {{"locations", p.schema.locations}};
  j["t0"] = p.t0.iso();
  j["n_train"] = p.n_train;
  j["residual_sd"] = p.residual_sd;
  json params;
  if (const auto* lin = std::get_if<LinearModel>(&p.model)) {
    params["intercept"] = lin->intercept;
    params["coefficients"] = lin->coef;
  } else {
    const auto& f = std::get<ForestModel>(p.model);
    params["hyper"] = {{"n_trees", f.params.n_trees},
                       {"max_depth", f.params.max_depth},
                       {"min_leaf", f.params.min_leaf},
                       {"bag_fraction", f.params.bag_fraction},
                       {"features_per_split", f.params.features_per_split}};
    json trees = json::array();
    for (const auto& t : f.trees) {
      trees.push_back({{"feature", t.feature},
                       {"threshold", t.threshold},
                       {"left", t.left},
                       {"right", t.right},
                       {"value", t.value}});
    }
    params["trees"] = trees;
  }
  if (!p.calibration.empty()) params["calibration"] = calibration_to_json(p.calibration);
  j["parameters"] = params;
  return j.dump();
}

BaselinePredictor load_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model JSON: ") + e.what());
  }
  try {
    const std::string version = j.at("schema_version").get<std::string>();
    if (version != kModelSchemaVersion) {
      throw DataError("model schema version '" + version + "' unsupported (expected '" +
                      std::string(kModelSchemaVersion) + "')");
    }
    BaselinePredictor p;
    p.schema.locations = j.at("vocabulary").at("locations").get<std::vector<std::string>>();
    p.t0 = Date::parse(j.at("t0").get<std::string>());
    p.n_train = j.at("n_train").get<std::int64_t>();
    p.residual_sd = j.at("residual_sd").get<double>();
    const auto& params = j.at("parameters");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
      LinearModel lin;
      lin.intercept = params.at("intercept").get<double>();
      lin.coef = params.at("coefficients").get<std::vector<double>>();
      if (lin.coef.size() != static_cast<std::size_t>(p.schema.dim())) {
        throw DataError("model coefficient count does not match vocabulary");
      }
      p.model = std::move(lin);
    } else if (kind == "forest") {
      ForestModel f;
      const auto& h = params.at("hyper");
      f.params.n_trees = h.at("n_trees").get<int>();
      f.params.max_depth = h.at("max_depth").get<int>();
      f.params.min_leaf = h.at("min_leaf").get<int>();
      f.params.bag_fraction = h.at("bag_fraction").get<double>();
      f.params.features_per_split = h.at("features_per_split").get<int>();
      for (const auto& jt : params.at("trees")) {
        Tree t;
        t.feature = jt.at("feature").get<std::vector<std::int32_t>>();
        t.threshold = jt.at("threshold").get<std::vector<double>>();
        t.left = jt.at("left").get<std::vector<std::int32_t>>();
        t.right = jt.at("right").get<std::vector<std::int32_t>>();
        t.value = jt.at("value").get<std::vector<double>>();
        const std::size_t nn = t.feature.size();
        if (t.threshold.size() != nn || t.left.size() != nn || t.right.size() != nn ||
            t.value.size() != nn || nn == 0) {
          throw DataError("malformed tree arrays in model JSON");
        }
        f.trees.push_back(std::move(t));
      }
      if (f.trees.empty()) throw DataError("forest model has no trees");
      p.model = std::move(f);
    } else {
      throw DataError("unknown model kind '" + kind + "'");
    }
    if (params.contains("calibration")) {
      p.calibration = calibration_from_json(params.at("calibration"));
    }
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model JSON: ") + e.what());
  }
}

std::string model_id(const BaselinePredictor& p) {
  const std::uint64_t h = fnv1a64(save_model_json(p));
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

HoldoutError holdout_relative_error(const BaselinePredictor& p, const Snapshot& holdout,
                                    Exec exec) {
  const std::size_t n = holdout.records.size();
  if (n == 0) throw DataError("holdout snapshot is empty");
  std::vector<double> err(n);
  par::for_blocks(n, exec, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& r = holdout.records[k];
      const double price = price_usd(r.price_cents);
      err[k] = std::abs(price - p.predict(r.attrs)) / price;
    }
  });
  std::sort(err.begin(), err.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= n) return err[n - 1];
    const double w = pos - static_cast<double>(i);
    return err[i] * (1.0 - w) + err[i + 1] * w;
  };
  return {quantile(0.5), quantile(0.9)};
}

}  // namespace hci
