#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hci/domain.hpp"
#include "hci/parallel.hpp"

namespace hci {

// Log-additive price law: log price = base + class_step[g] +
// class_slope[g] * (carat - class lower bound) + per-grade offsets +
// shape premium + location offset (+ optional colour x class interaction),
// then multiplied by the market state's group and shape factors and
// lognormal noise. Everything is in log space except the factors.
struct PriceLaw {
  double base = 0.0;
  std::array<double, kNumClasses> class_step{};
  std::array<double, kNumClasses> class_slope{};
  std::array<double, kNumColours> colour_offset{};
  std::array<double, kNumClarities> clarity_offset{};
  std::array<double, kNumGrade5> cut_offset{};
  std::array<double, kNumGrade5> polish_offset{};
  std::array<double, kNumGrade5> symmetry_offset{};
  std::array<double, kNumFluorescence> fluorescence_offset{};
  std::array<double, kNumShapes> shape_offset{};
  std::vector<std::pair<std::string, double>> location_offset;
  // Non-zero entries make the law non-additive in the hedonic features.
  std::array<std::array<double, kNumClasses>, kNumColours> colour_class_interaction{};

  double log_price(const DiamondAttributes& a) const;
};

// Sampling distributions for attributes. Categorical draws use inverse-CDF
// in declaration order. Carats are uniform within the class band, floored
// to 2 decimals (class 7 is capped at class7_max instead of 100).
struct AttributeLaw {
  std::array<double, kNumClasses> class_mix{};
  std::array<double, kNumShapes> shape_mix{};
  std::array<double, kNumColours> colour_mix{};
  std::array<double, kNumClarities> clarity_mix{};
  std::array<double, kNumGrade5> cut_mix{};
  std::array<double, kNumGrade5> polish_mix{};
  std::array<double, kNumGrade5> symmetry_mix{};
  std::array<double, kNumFluorescence> fluorescence_mix{};
  std::vector<std::pair<std::string, double>> location_mix;
  double class7_max = 10.0;
};

struct GeneratorConfig {
  AttributeLaw attributes;
  PriceLaw price_law;
  double noise_sd = 0.1;
  int n_per_snapshot = 50000;

  // Defaults follow the wholesale-market stylized facts: class mix matching
  // the published count distribution, value concentrated in 1-2 ct stones,
  // Round-dominated shapes.
  static GeneratorConfig defaults();
};

// Reallocates `fraction` of `from`'s volume share to `to`.
struct VolumeShift {
  Shape from = Shape::Round;
  Shape to = Shape::Cushion;
  double fraction = 0.0;
};

// Market condition on one date. Scenario phases multiply factors into the
// pre-existing state, so stacked scenarios compose.
struct MarketState {
  Date date;
  std::array<double, kNumClasses> group_factor{1, 1, 1, 1, 1, 1, 1};
  std::array<double, kNumShapes> shape_factor{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::vector<VolumeShift> volume_shifts;

  static MarketState neutral(Date d);
};

struct CustomStep {
  int offset = 0;  // snapshots after the scenario start
  std::array<double, kNumClasses> group_mult{1, 1, 1, 1, 1, 1, 1};
  std::array<double, kNumShapes> shape_mult{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::vector<VolumeShift> shifts;
};

enum class ScenarioKind { FashionShift, SmallDiamondSlump, Custom };

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Custom;
  int start = 1;     // index into the state sequence (0 is the baseline)
  int duration = 1;  // FashionShift window length; the slump always spans 13
  std::vector<CustomStep> steps;
};

// Number of states the scenario touches from `start`.
int scenario_window(const ScenarioSpec& spec);

// Applies a scenario to a sequence of per-date states. Throws DataError if
// the window falls outside the sequence.
std::vector<MarketState> apply_scenario(const ScenarioSpec& spec,
                                        std::vector<MarketState> states);

// Deterministic price for one stone under a state (no noise), in cents.
PriceCents true_price_cents(const GeneratorConfig& config, const DiamondAttributes& a,
                            const MarketState& state);

// Fully deterministic given (seed, state.date): record k's draws depend only
// on the hash key, never on thread count or evaluation order.
Snapshot generate_snapshot(const GeneratorConfig& config, const MarketState& state, int n,
                           std::uint64_t seed, Exec exec = Exec::parallel);

// Ground truth the index is later judged against: the weighted market factor
// per date, scaled to 1000 at the first date. Weights are the generator's
// own final (blended) weights computed from the first snapshot's value
// shares; the shape-mix term enters through the volume-weighted mean shape
// factor, matching what a per-stone ratio statistic converges to.
struct TrueIndexPath {
  std::vector<Date> dates;
  std::vector<double> value;
  std::array<double, kNumClasses> weights{};
};

struct GeneratedSeries {
  std::vector<Snapshot> snapshots;
  std::vector<MarketState> states;
  TrueIndexPath true_path;
};

GeneratedSeries generate_series(const GeneratorConfig& config, const std::vector<Date>& dates,
                                const ScenarioSpec* scenario, std::uint64_t seed,
                                Exec exec = Exec::parallel);

// JSON round-trip for configs and scenario specs (used by the CLI).
std::string generator_config_to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const std::string& text);
std::string scenario_spec_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_spec_from_json(const std::string& text);

}  // namespace hci
