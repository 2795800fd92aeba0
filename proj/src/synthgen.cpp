#include "hci/synthgen.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "hci/rng.hpp"

namespace hci {

namespace {

using nlohmann::json;

// Counter slots per record; one slot per independent draw.
enum Slot : std::uint64_t {
  kSlotClass = 0,
  kSlotCarat,
  kSlotColour,
  kSlotClarity,
  kSlotCut,
  kSlotPolish,
  kSlotSymmetry,
  kSlotFluor,
  kSlotShape,
  kSlotLocation,
  kSlotNoise,
  kSlotsPerRecord = 16,
};

struct Cumulative {
  std::vector<double> cum;

  static Cumulative from(const double* p, std::size_t n) {
    Cumulative c;
    c.cum.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] < 0.0) throw DataError("negative mix probability");
      total += p[i];
      c.cum[i] = total;
    }
    if (!(total > 0.0)) throw DataError("mix probabilities sum to zero");
    for (auto& v : c.cum) v /= total;
    c.cum.back() = 1.0;
    return c;
  }

  std::size_t draw(double u) const {
    for (std::size_t i = 0; i + 1 < cum.size(); ++i) {
      if (u < cum[i]) return i;
    }
    return cum.size() - 1;
  }
};

std::array<double, kNumShapes> shifted_shape_mix(const AttributeLaw& law,
                                                 const std::vector<VolumeShift>& shifts) {
  std::array<double, kNumShapes> mix = law.shape_mix;
  for (const auto& s : shifts) {
    if (!(s.fraction >= 0.0 && s.fraction <= 1.0)) {
      throw DataError("volume shift fraction outside [0,1]");
    }
    const double moved = mix[static_cast<int>(s.from)] * s.fraction;
    mix[static_cast<int>(s.from)] -= moved;
    mix[static_cast<int>(s.to)] += moved;
  }
  return mix;
}

}  // namespace

double PriceLaw::log_price(const DiamondAttributes& a) const {
  const int g = carat_class(a.carat);
  double lp = base + class_step[g] + class_slope[g] * (a.carat - kClassLower[g]);
  lp += colour_offset[static_cast<int>(a.colour)];
  lp += clarity_offset[static_cast<int>(a.clarity)];
  lp += cut_offset[static_cast<int>(a.cut)];
  lp += polish_offset[static_cast<int>(a.polish)];
  lp += symmetry_offset[static_cast<int>(a.symmetry)];
  lp += fluorescence_offset[static_cast<int>(a.fluorescence)];
  lp += shape_offset[static_cast<int>(a.shape)];
  for (const auto& [name, off] : location_offset) {
    if (name == a.location) {
      lp += off;
      break;
    }
  }
  lp += colour_class_interaction[static_cast<int>(a.colour)][g];
  return lp;
}

GeneratorConfig GeneratorConfig::defaults() {
  GeneratorConfig c;
  auto& at = c.attributes;
  const std::array<double, kNumClasses> counts = {329506, 281696, 134001, 24661,
                                                  8710,   2333,   4937};
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (int g = 0; g < kNumClasses; ++g) at.class_mix[g] = counts[g] / total;
  at.shape_mix = {0.55, 0.10, 0.08, 0.08, 0.05, 0.05, 0.03, 0.03, 0.02, 0.01};
  at.colour_mix = {0.08, 0.10, 0.12, 0.14, 0.13, 0.12, 0.10, 0.09, 0.07, 0.05};
  at.clarity_mix = {0.02, 0.06, 0.10, 0.12, 0.16, 0.18, 0.19, 0.12, 0.05};
  at.cut_mix = {0.45, 0.30, 0.15, 0.07, 0.03};
  at.polish_mix = {0.45, 0.30, 0.15, 0.07, 0.03};
  at.symmetry_mix = {0.45, 0.30, 0.15, 0.07, 0.03};
  at.fluorescence_mix = {0.55, 0.20, 0.12, 0.08, 0.05};
  at.location_mix = {{"NYC", 0.35}, {"ANTWERP", 0.25}, {"TELAVIV", 0.15},
                     {"MUMBAI", 0.15}, {"HONGKONG", 0.10}};
  at.class7_max = 10.0;

  auto& law = c.price_law;
  law.base = std::log(320.0);
  law.class_step = {0.00, 1.35, 2.80, 4.10, 4.85, 5.25, 5.90};
  law.class_slope = {2.40, 1.30, 0.85, 0.55, 0.40, 0.33, 0.10};
  for (int i = 0; i < kNumColours; ++i) law.colour_offset[i] = -0.048 * i;
  for (int i = 0; i < kNumClarities; ++i) law.clarity_offset[i] = -0.055 * i;
  for (int i = 0; i < kNumGrade5; ++i) {
    law.cut_offset[i] = -0.022 * i;
    law.polish_offset[i] = -0.022 * i;
    law.symmetry_offset[i] = -0.022 * i;
  }
  for (int i = 0; i < kNumFluorescence; ++i) law.fluorescence_offset[i] = -0.016 * i;
  law.shape_offset = {0.0,    -0.030, -0.050, -0.040, -0.045,
                      -0.060, -0.055, -0.050, -0.040, -0.070};
  law.location_offset = {{"NYC", 0.0}, {"ANTWERP", -0.005}, {"TELAVIV", -0.010},
                         {"MUMBAI", -0.020}, {"HONGKONG", -0.008}};
  c.noise_sd = 0.1;
  c.n_per_snapshot = 50000;
  return c;
}

MarketState MarketState::neutral(Date d) {
  MarketState s;
  s.date = d;
  return s;
}

int scenario_window(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::FashionShift:
      return spec.duration;
    case ScenarioKind::SmallDiamondSlump:
      return 13;
    case ScenarioKind::Custom: {
      int w = 0;
      for (const auto& s : spec.steps) w = std::max(w, s.offset + 1);
      return w;
    }
  }
  return 0;
}

std::vector<MarketState> apply_scenario(const ScenarioSpec& spec,
                                        std::vector<MarketState> states) {
  const int window = scenario_window(spec);
  if (window <= 0) throw DataError("scenario window is empty");
  if (spec.start < 0 ||
      static_cast<std::size_t>(spec.start) + static_cast<std::size_t>(window) > states.size()) {
    throw DataError("scenario window out of range");
  }
  switch (spec.kind) {
    case ScenarioKind::FashionShift:
      for (int o = 0; o < window; ++o) {
        auto& st = states[spec.start + o];
        st.shape_factor[static_cast<int>(Shape::Cushion)] *= 1.05;
        st.volume_shifts.push_back({Shape::Round, Shape::Cushion, 0.05});
      }
      break;
    case ScenarioKind::SmallDiamondSlump:
      for (int o = 0; o < 13; ++o) {
        const double f = (o < 3 || o > 9) ? 0.95 : 0.90;
        auto& st = states[spec.start + o];
        st.group_factor[0] *= f;
        st.group_factor[1] *= f;
      }
      break;
    case ScenarioKind::Custom:
      for (const auto& step : spec.steps) {
        if (step.offset < 0) throw DataError("custom scenario step offset is negative");
        auto& st = states[spec.start + step.offset];
        for (int g = 0; g < kNumClasses; ++g) st.group_factor[g] *= step.group_mult[g];
        for (int s = 0; s < kNumShapes; ++s) st.shape_factor[s] *= step.shape_mult[s];
        for (const auto& sh : step.shifts) st.volume_shifts.push_back(sh);
      }
      break;
  }
  return states;
}

PriceCents true_price_cents(const GeneratorConfig& config, const DiamondAttributes& a,
                            const MarketState& state) {
  const int g = carat_class(a.carat);
  const double usd = std::exp(config.price_law.log_price(a)) * state.group_factor[g] *
                     state.shape_factor[static_cast<int>(a.shape)];
  const double cents = usd * 100.0;
  if (!(cents >= 1.0 && cents < 9.0e17)) {
    throw DataError("price law produced out-of-range price");
  }
  return static_cast<PriceCents>(std::llround(cents));
}

Snapshot generate_snapshot(const GeneratorConfig& config, const MarketState& state, int n,
                           std::uint64_t seed, Exec exec) {
  if (n <= 0) throw DataError("snapshot size must be positive");
  if (config.noise_sd < 0.0) throw DataError("noise_sd must be non-negative");
  const auto& at = config.attributes;
  const auto class_cum = Cumulative::from(at.class_mix.data(), kNumClasses);
  const auto shape_mix = shifted_shape_mix(at, state.volume_shifts);
  const auto shape_cum = Cumulative::from(shape_mix.data(), kNumShapes);
  const auto colour_cum = Cumulative::from(at.colour_mix.data(), kNumColours);
  const auto clarity_cum = Cumulative::from(at.clarity_mix.data(), kNumClarities);
  const auto cut_cum = Cumulative::from(at.cut_mix.data(), kNumGrade5);
  const auto polish_cum = Cumulative::from(at.polish_mix.data(), kNumGrade5);
  const auto symmetry_cum = Cumulative::from(at.symmetry_mix.data(), kNumGrade5);
  const auto fluor_cum = Cumulative::from(at.fluorescence_mix.data(), kNumFluorescence);
  std::vector<double> loc_probs;
  for (const auto& [name, p] : at.location_mix) loc_probs.push_back(p);
  if (loc_probs.empty()) throw DataError("location mix is empty");
  const auto loc_cum = Cumulative::from(loc_probs.data(), loc_probs.size());

  const CounterRng rng(seed, static_cast<std::uint64_t>(
                                 static_cast<std::int64_t>(state.date.serial())));
  Snapshot snap;
  snap.date = state.date;
  snap.records.resize(static_cast<std::size_t>(n));

  par::for_blocks(static_cast<std::size_t>(n), exec, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const std::uint64_t c0 = k * kSlotsPerRecord;
      PricedDiamond& rec = snap.records[k];
      DiamondAttributes& a = rec.attrs;
      const int g = static_cast<int>(class_cum.draw(rng.uniform(c0 + kSlotClass)));
      const double hi_carat = g == kNumClasses - 1 ? at.class7_max : kClassUpper[g];
      const double u = rng.uniform(c0 + kSlotCarat);
      const double raw = kClassLower[g] + u * (hi_carat - kClassLower[g]);
      a.carat = std::floor(raw * 100.0) / 100.0;
      a.colour = static_cast<Colour>(colour_cum.draw(rng.uniform(c0 + kSlotColour)));
      a.clarity = static_cast<Clarity>(clarity_cum.draw(rng.uniform(c0 + kSlotClarity)));
      a.cut = static_cast<Grade5>(cut_cum.draw(rng.uniform(c0 + kSlotCut)));
      a.polish = static_cast<Grade5>(polish_cum.draw(rng.uniform(c0 + kSlotPolish)));
      a.symmetry = static_cast<Grade5>(symmetry_cum.draw(rng.uniform(c0 + kSlotSymmetry)));
      a.fluorescence =
          static_cast<Fluorescence>(fluor_cum.draw(rng.uniform(c0 + kSlotFluor)));
      a.shape = static_cast<Shape>(shape_cum.draw(rng.uniform(c0 + kSlotShape)));
      a.location = at.location_mix[loc_cum.draw(rng.uniform(c0 + kSlotLocation))].first;
      const double noise =
          config.noise_sd == 0.0 ? 1.0
                                 : std::exp(config.noise_sd * rng.normal(c0 + kSlotNoise));
      const double usd = std::exp(config.price_law.log_price(a)) * state.group_factor[g] *
                         state.shape_factor[static_cast<int>(a.shape)] * noise;
      const double cents = usd * 100.0;
      if (!(cents >= 1.0 && cents < 9.0e17)) {
        throw DataError("price law produced out-of-range price");
      }
      rec.price_cents = static_cast<PriceCents>(std::llround(cents));
    }
  });
  return snap;
}

GeneratedSeries generate_series(const GeneratorConfig& config, const std::vector<Date>& dates,
                                const ScenarioSpec* scenario, std::uint64_t seed, Exec exec) {
  if (dates.empty()) throw DataError("generate_series needs at least one date");
  GeneratedSeries out;
  out.states.reserve(dates.size());
  for (const Date& d : dates) out.states.push_back(MarketState::neutral(d));
  if (scenario != nullptr) out.states = apply_scenario(*scenario, std::move(out.states));

  out.snapshots.reserve(dates.size());
  for (const auto& st : out.states) {
    out.snapshots.push_back(generate_snapshot(config, st, config.n_per_snapshot, seed, exec));
  }

  // Final weights from the first snapshot's realized value shares.
  std::array<double, kNumClasses> totals{};
  for (const auto& r : out.snapshots.front().records) {
    totals[carat_class(r.attrs.carat)] += price_usd(r.price_cents);
  }
  const double grand = std::accumulate(totals.begin(), totals.end(), 0.0);
  for (int g = 0; g < kNumClasses; ++g) {
    out.true_path.weights[g] = (totals[g] / grand + 1.0 / kNumClasses) / 2.0;
  }

  out.true_path.dates = dates;
  out.true_path.value.resize(dates.size());
  double base_value = 0.0;
  for (std::size_t t = 0; t < out.states.size(); ++t) {
    const auto& st = out.states[t];
    const auto mix = shifted_shape_mix(config.attributes, st.volume_shifts);
    double mean_shape = 0.0;
    double mix_total = 0.0;
    for (int s = 0; s < kNumShapes; ++s) {
      mean_shape += mix[s] * st.shape_factor[s];
      mix_total += mix[s];
    }
    mean_shape /= mix_total;
    double v = 0.0;
    for (int g = 0; g < kNumClasses; ++g) v += out.true_path.weights[g] * st.group_factor[g];
    v *= mean_shape;
    if (t == 0) base_value = v;
    out.true_path.value[t] = 1000.0 * v / base_value;
  }
  return out;
}

namespace {

json pairs_to_json(const std::vector<std::pair<std::string, double>>& v) {
  json arr = json::array();
  for (const auto& [k, val] : v) arr.push_back(json::array({k, val}));
  return arr;
}

std::vector<std::pair<std::string, double>> pairs_from_json(const json& j) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& e : j) {
    out.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
  }
  return out;
}

template <std::size_t N>
void read_array(const json& j, const char* key, std::array<double, N>& out) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (a.size() != N) {
    throw DataError(std::string("config field '") + key + "' must have " + std::to_string(N) +
                    " entries");
  }
  for (std::size_t i = 0; i < N; ++i) out[i] = a.at(i).get<double>();
}

Shape shape_from_json(const json& j) {
  const auto s = parse_shape(j.get<std::string>());
  if (!s) throw DataError("unknown shape '" + j.get<std::string>() + "' in config");
  return *s;
}

}  // namespace

std::string generator_config_to_json(const GeneratorConfig& config) {
  const auto& at = config.attributes;
  const auto& law = config.price_law;
  json j;
  j["noise_sd"] = config.noise_sd;
  j["n_per_snapshot"] = config.n_per_snapshot;
  json ja;
  ja["class_mix"] = at.class_mix;
  ja["shape_mix"] = at.shape_mix;
  ja["colour_mix"] = at.colour_mix;
  ja["clarity_mix"] = at.clarity_mix;
  ja["cut_mix"] = at.cut_mix;
  ja["polish_mix"] = at.polish_mix;
  ja["symmetry_mix"] = at.symmetry_mix;
  ja["fluorescence_mix"] = at.fluorescence_mix;
  ja["location_mix"] = pairs_to_json(at.location_mix);
  ja["class7_max"] = at.class7_max;
  j["attributes"] = ja;
  json jl;
  jl["base"] = law.base;
  jl["class_step"] = law.class_step;
  jl["class_slope"] = law.class_slope;
  jl["colour_offset"] = law.colour_offset;
  jl["clarity_offset"] = law.clarity_offset;
  jl["cut_offset"] = law.cut_offset;
  jl["polish_offset"] = law.polish_offset;
  jl["symmetry_offset"] = law.symmetry_offset;
  jl["fluorescence_offset"] = law.fluorescence_offset;
  jl["shape_offset"] = law.shape_offset;
  jl["location_offset"] = pairs_to_json(law.location_offset);
  json inter = json::array();
  for (const auto& row : law.colour_class_interaction) inter.push_back(row);
  jl["colour_class_interaction"] = inter;
  j["price_law"] = jl;
  return j.dump(2);
}

GeneratorConfig generator_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid generator config JSON: ") + e.what());
  }
  GeneratorConfig c = GeneratorConfig::defaults();
  try {
    if (j.contains("noise_sd")) c.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("n_per_snapshot")) c.n_per_snapshot = j.at("n_per_snapshot").get<int>();
    if (j.contains("attributes")) {
      const auto& ja = j.at("attributes");
      auto& at = c.attributes;
      read_array(ja, "class_mix", at.class_mix);
      read_array(ja, "shape_mix", at.shape_mix);
      read_array(ja, "colour_mix", at.colour_mix);
      read_array(ja, "clarity_mix", at.clarity_mix);
      read_array(ja, "cut_mix", at.cut_mix);
      read_array(ja, "polish_mix", at.polish_mix);
      read_array(ja, "symmetry_mix", at.symmetry_mix);
      read_array(ja, "fluorescence_mix", at.fluorescence_mix);
      if (ja.contains("location_mix")) at.location_mix = pairs_from_json(ja.at("location_mix"));
      if (ja.contains("class7_max")) at.class7_max = ja.at("class7_max").get<double>();
    }
    if (j.contains("price_law")) {
      const auto& jl = j.at("price_law");
      auto& law = c.price_law;
      if (jl.contains("base")) law.base = jl.at("base").get<double>();
      read_array(jl, "class_step", law.class_step);
      read_array(jl, "class_slope", law.class_slope);
      read_array(jl, "colour_offset", law.colour_offset);
      read_array(jl, "clarity_offset", law.clarity_offset);
      read_array(jl, "cut_offset", law.cut_offset);
      read_array(jl, "polish_offset", law.polish_offset);
      read_array(jl, "symmetry_offset", law.symmetry_offset);
      read_array(jl, "fluorescence_offset", law.fluorescence_offset);
      read_array(jl, "shape_offset", law.shape_offset);
      if (jl.contains("location_offset")) {
        law.location_offset = pairs_from_json(jl.at("location_offset"));
      }
      if (jl.contains("colour_class_interaction")) {
        const auto& inter = jl.at("colour_class_interaction");
        if (inter.size() != kNumColours) {
          throw DataError("colour_class_interaction must have 10 rows");
        }
        for (int i = 0; i < kNumColours; ++i) {
          const auto& row = inter.at(i);
          if (row.size() != kNumClasses) {
            throw DataError("colour_class_interaction rows must have 7 entries");
          }
          for (int g = 0; g < kNumClasses; ++g) {
            law.colour_class_interaction[i][g] = row.at(g).get<double>();
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid generator config JSON: ") + e.what());
  }
  if (c.noise_sd < 0.0) throw DataError("noise_sd must be non-negative");
  if (c.n_per_snapshot <= 0) throw DataError("n_per_snapshot must be positive");
  return c;
}

std::string scenario_spec_to_json(const ScenarioSpec& spec) {
  json j;
  switch (spec.kind) {
    case ScenarioKind::FashionShift:
      j["kind"] = "fashion_shift";
      break;
    case ScenarioKind::SmallDiamondSlump:
      j["kind"] = "small_diamond_slump";
      break;
    case ScenarioKind::Custom:
      j["kind"] = "custom";
      break;
  }
  j["start"] = spec.start;
  j["duration"] = spec.duration;
  json steps = json::array();
  for (const auto& s : spec.steps) {
    json js;
    js["offset"] = s.offset;
    js["group_mult"] = s.group_mult;
    js["shape_mult"] = s.shape_mult;
    json shifts = json::array();
    for (const auto& sh : s.shifts) {
      shifts.push_back({{"from", std::string(to_string(sh.from))},
                        {"to", std::string(to_string(sh.to))},
                        {"fraction", sh.fraction}});
    }
    js["shifts"] = shifts;
    steps.push_back(js);
  }
  j["steps"] = steps;
  return j.dump(2);
}

ScenarioSpec scenario_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid scenario JSON: ") + e.what());
  }
  ScenarioSpec spec;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fashion_shift") {
      spec.kind = ScenarioKind::FashionShift;
    } else if (kind == "small_diamond_slump") {
      spec.kind = ScenarioKind::SmallDiamondSlump;
    } else if (kind == "custom") {
      spec.kind = ScenarioKind::Custom;
    } else {
      throw DataError("unknown scenario kind '" + kind + "'");
    }
    if (j.contains("start")) spec.start = j.at("start").get<int>();
    if (j.contains("duration")) spec.duration = j.at("duration").get<int>();
    if (j.contains("steps")) {
      for (const auto& js : j.at("steps")) {
        CustomStep s;
        if (js.contains("offset")) s.offset = js.at("offset").get<int>();
        read_array(js, "group_mult", s.group_mult);
        read_array(js, "shape_mult", s.shape_mult);
        if (js.contains("shifts")) {
          for (const auto& sh : js.at("shifts")) {
            VolumeShift v;
            v.from = shape_from_json(sh.at("from"));
            v.to = shape_from_json(sh.at("to"));
            v.fraction = sh.at("fraction").get<double>();
            s.shifts.push_back(v);
          }
        }
        spec.steps.push_back(std::move(s));
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid scenario JSON: ") + e.what());
  }
  return spec;
}

}  // namespace hci
