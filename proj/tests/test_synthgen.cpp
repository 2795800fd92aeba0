#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "hci/synthgen.hpp"

using namespace hci;

namespace {

std::vector<Date> weekly(const char* start, int count) {
  std::vector<Date> dates;
  Date d = Date::parse(start);
  for (int i = 0; i < count; ++i) {
    dates.push_back(d);
    d = d.plus_days(7);
  }
  return dates;
}

bool same_records(const Snapshot& a, const Snapshot& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (!(a.records[i].attrs == b.records[i].attrs) ||
        a.records[i].price_cents != b.records[i].price_cents) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("generation is deterministic and order-independent") {
  const GeneratorConfig config = GeneratorConfig::defaults();
  const MarketState state = MarketState::neutral(Date::parse("2026-01-05"));
  const Snapshot a = generate_snapshot(config, state, 20000, 42, Exec::serial);
  const Snapshot b = generate_snapshot(config, state, 20000, 42, Exec::parallel);
  const Snapshot c = generate_snapshot(config, state, 20000, 42, Exec::parallel);
  CHECK(same_records(a, b));
  CHECK(same_records(b, c));
  const Snapshot other_seed = generate_snapshot(config, state, 20000, 43);
  CHECK(!same_records(a, other_seed));
  const MarketState other_date = MarketState::neutral(Date::parse("2026-01-12"));
  CHECK(!same_records(a, generate_snapshot(config, other_date, 20000, 42)));
}

TEST_CASE("a record's draws do not depend on the snapshot size") {
  const GeneratorConfig config = GeneratorConfig::defaults();
  const MarketState state = MarketState::neutral(Date::parse("2026-01-05"));
  const Snapshot small = generate_snapshot(config, state, 1000, 7);
  const Snapshot big = generate_snapshot(config, state, 5000, 7);
  for (std::size_t i = 0; i < small.records.size(); ++i) {
    REQUIRE(small.records[i].attrs == big.records[i].attrs);
    REQUIRE(small.records[i].price_cents == big.records[i].price_cents);
  }
}

TEST_CASE("zero noise reproduces the deterministic price law exactly") {
  GeneratorConfig config = GeneratorConfig::defaults();
  config.noise_sd = 0.0;
  const MarketState state = MarketState::neutral(Date::parse("2026-01-05"));
  const Snapshot snap = generate_snapshot(config, state, 5000, 11);
  for (const auto& r : snap.records) {
    REQUIRE(r.price_cents == true_price_cents(config, r.attrs, state));
  }
}

TEST_CASE("carats are floored to two decimals inside the class bands") {
  const GeneratorConfig config = GeneratorConfig::defaults();
  const MarketState state = MarketState::neutral(Date::parse("2026-01-05"));
  const Snapshot snap = generate_snapshot(config, state, 50000, 3);
  for (const auto& r : snap.records) {
    const double c = r.attrs.carat;
    REQUIRE(c >= 0.25);
    REQUIRE(c <= config.attributes.class7_max);
    const double scaled = c * 100.0;
    REQUIRE(std::abs(scaled - std::round(scaled)) < 1e-9);
  }
}

TEST_CASE("attribute frequencies track the configured mixes") {
  const GeneratorConfig config = GeneratorConfig::defaults();
  const MarketState state = MarketState::neutral(Date::parse("2026-01-05"));
  const int n = 200000;
  const Snapshot snap = generate_snapshot(config, state, n, 5);
  std::array<int, kNumClasses> class_count{};
  std::array<int, kNumShapes> shape_count{};
  for (const auto& r : snap.records) {
    ++class_count[static_cast<std::size_t>(carat_class(r.attrs.carat))];
    ++shape_count[static_cast<std::size_t>(r.attrs.shape)];
  }
  for (int g = 0; g < kNumClasses; ++g) {
    const double share = static_cast<double>(class_count[g]) / n;
    CHECK(std::abs(share - config.attributes.class_mix[g]) < 0.01);
  }
  for (int s = 0; s < kNumShapes; ++s) {
    const double share = static_cast<double>(shape_count[s]) / n;
    CHECK(std::abs(share - config.attributes.shape_mix[s]) < 0.01);
  }
}

TEST_CASE("volume shifts reallocate shape share") {
  const GeneratorConfig config = GeneratorConfig::defaults();
  MarketState state = MarketState::neutral(Date::parse("2026-01-05"));
  state.volume_shifts.push_back({Shape::Round, Shape::Cushion, 0.05});
  const int n = 200000;
  const Snapshot snap = generate_snapshot(config, state, n, 5);
  int round = 0, cushion = 0;
  for (const auto& r : snap.records) {
    round += r.attrs.shape == Shape::Round;
    cushion += r.attrs.shape == Shape::Cushion;
  }
  const double round_mix = config.attributes.shape_mix[0];
  const double cushion_mix = config.attributes.shape_mix[1];
  CHECK(static_cast<double>(round) / n ==
        doctest::Approx(round_mix * 0.95).epsilon(0.02));
  CHECK(static_cast<double>(cushion) / n ==
        doctest::Approx(cushion_mix + 0.05 * round_mix).epsilon(0.02));
}

TEST_CASE("fashion shift scenario touches only its window") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::FashionShift;
  spec.start = 2;
  spec.duration = 3;
  std::vector<MarketState> states;
  for (const Date d : weekly("2026-01-05", 8)) states.push_back(MarketState::neutral(d));
  const auto shocked = apply_scenario(spec, states);
  REQUIRE(shocked.size() == 8);
  for (std::size_t i = 0; i < shocked.size(); ++i) {
    const bool in_window = i >= 2 && i < 5;
    const auto cushion = static_cast<std::size_t>(Shape::Cushion);
    if (in_window) {
      CHECK(shocked[i].shape_factor[cushion] == doctest::Approx(1.05));
      REQUIRE(shocked[i].volume_shifts.size() == 1);
      CHECK(shocked[i].volume_shifts[0].from == Shape::Round);
      CHECK(shocked[i].volume_shifts[0].to == Shape::Cushion);
      CHECK(shocked[i].volume_shifts[0].fraction == doctest::Approx(0.05));
    } else {
      CHECK(shocked[i].shape_factor[cushion] == 1.0);
      CHECK(shocked[i].volume_shifts.empty());
    }
    for (int g = 0; g < kNumClasses; ++g) CHECK(shocked[i].group_factor[g] == 1.0);
  }
}

TEST_CASE("small-diamond slump runs 0.95/0.90/0.95 over thirteen snapshots") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::SmallDiamondSlump;
  spec.start = 1;
  CHECK(scenario_window(spec) == 13);
  std::vector<MarketState> states;
  for (const Date d : weekly("2026-01-05", 14)) states.push_back(MarketState::neutral(d));
  const auto shocked = apply_scenario(spec, states);
  const auto factor_at = [&](std::size_t i) { return shocked[i].group_factor[0]; };
  CHECK(factor_at(0) == 1.0);
  for (std::size_t i = 1; i <= 3; ++i) CHECK(factor_at(i) == doctest::Approx(0.95));
  for (std::size_t i = 4; i <= 10; ++i) CHECK(factor_at(i) == doctest::Approx(0.90));
  for (std::size_t i = 11; i <= 13; ++i) CHECK(factor_at(i) == doctest::Approx(0.95));
  for (std::size_t i = 0; i < shocked.size(); ++i) {
    CHECK(shocked[i].group_factor[1] == factor_at(i));  // classes 1-2 move together
    CHECK(shocked[i].group_factor[2] == 1.0);           // larger stones untouched
  }
}

TEST_CASE("scenario windows must fit the date range") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::SmallDiamondSlump;
  spec.start = 5;
  std::vector<MarketState> states;
  for (const Date d : weekly("2026-01-05", 10)) states.push_back(MarketState::neutral(d));
  CHECK_THROWS_AS(apply_scenario(spec, states), DataError);
}

TEST_CASE("null-scenario true path sits exactly at 1000") {
  GeneratorConfig config = GeneratorConfig::defaults();
  config.n_per_snapshot = 5000;
  const GeneratedSeries series =
      generate_series(config, weekly("2026-01-05", 6), nullptr, 17);
  REQUIRE(series.true_path.value.size() == 6);
  for (const double v : series.true_path.value) CHECK(v == 1000.0);
  CHECK(series.snapshots.size() == 6);
  CHECK(series.states.size() == 6);
  double wsum = 0.0;
  for (const double w : series.true_path.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("slump true path dips by the weighted shock") {
  GeneratorConfig config = GeneratorConfig::defaults();
  config.n_per_snapshot = 20000;
  ScenarioSpec spec;
  spec.kind = ScenarioKind::SmallDiamondSlump;
  spec.start = 1;
  const GeneratedSeries series =
      generate_series(config, weekly("2026-01-05", 14), &spec, 29);
  const auto& w = series.true_path.weights;
  const double trough = 1000.0 * (1.0 - 0.10 * (w[0] + w[1]));
  CHECK(series.true_path.value[7] == doctest::Approx(trough).epsilon(1e-9));
  const double shoulder = 1000.0 * (1.0 - 0.05 * (w[0] + w[1]));
  CHECK(series.true_path.value[1] == doctest::Approx(shoulder).epsilon(1e-9));
  CHECK(series.true_path.value[0] == 1000.0);
}

TEST_CASE("fashion-shift true path reflects mix and price together") {
  GeneratorConfig config = GeneratorConfig::defaults();
  config.n_per_snapshot = 20000;
  ScenarioSpec spec;
  spec.kind = ScenarioKind::FashionShift;
  spec.start = 1;
  spec.duration = 2;
  const GeneratedSeries series =
      generate_series(config, weekly("2026-01-05", 4), &spec, 31);
  const double round_mix = config.attributes.shape_mix[0];
  const double cushion_mix = config.attributes.shape_mix[1];
  const double shifted_cushion = cushion_mix + 0.05 * round_mix;
  const double expected = 1000.0 * (1.0 + 0.05 * shifted_cushion);
  CHECK(series.true_path.value[1] == doctest::Approx(expected).epsilon(1e-9));
  CHECK(series.true_path.value[3] == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("generator config JSON round-trips") {
  const GeneratorConfig config = GeneratorConfig::defaults();
  const std::string j = generator_config_to_json(config);
  const GeneratorConfig back = generator_config_from_json(j);
  CHECK(generator_config_to_json(back) == j);
  CHECK_THROWS_AS(generator_config_from_json("{"), DataError);
  CHECK_THROWS_AS(generator_config_from_json(R"({"noise_sd": -1})"), DataError);
}

TEST_CASE("scenario spec JSON round-trips") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::Custom;
  spec.start = 2;
  CustomStep step;
  step.offset = 1;
  step.group_mult[2] = 1.04;
  step.shifts.push_back({Shape::Oval, Shape::Pear, 0.5});
  spec.steps.push_back(step);
  const std::string j = scenario_spec_to_json(spec);
  const ScenarioSpec back = scenario_spec_from_json(j);
  CHECK(scenario_spec_to_json(back) == j);
  CHECK(back.kind == ScenarioKind::Custom);
  REQUIRE(back.steps.size() == 1);
  CHECK(back.steps[0].group_mult[2] == doctest::Approx(1.04));
  CHECK_THROWS_AS(scenario_spec_from_json(R"({"kind": "nope"})"), DataError);
}

TEST_CASE("degenerate inputs are rejected") {
  const GeneratorConfig config = GeneratorConfig::defaults();
  const MarketState state = MarketState::neutral(Date::parse("2026-01-05"));
  CHECK_THROWS_AS(generate_snapshot(config, state, 0, 1), DataError);
  GeneratorConfig bad = config;
  bad.noise_sd = -0.1;
  CHECK_THROWS_AS(generate_snapshot(bad, state, 100, 1), DataError);
  MarketState bad_shift = state;
  bad_shift.volume_shifts.push_back({Shape::Round, Shape::Cushion, 1.5});
  CHECK_THROWS_AS(generate_snapshot(config, bad_shift, 100, 1), DataError);
}

}  // TEST_SUITE
