// Compares the OpenMP kernels against the serial reference implementation:
// wall time plus bit-identity of every result. Exits nonzero on any mismatch.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "hci/index.hpp"
#include "hci/inference.hpp"
#include "hci/parallel.hpp"
#include "hci/predictor.hpp"
#include "hci/synthgen.hpp"

namespace {

using hci::Exec;

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

struct Row {
  const char* name;
  double serial_ms;
  double parallel_ms;
  bool identical;
};

template <typename F>
double timed(F&& f) {
  const double t0 = now_ms();
  f();
  return now_ms() - t0;
}

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

bool same_snapshot(const hci::Snapshot& a, const hci::Snapshot& b) {
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

int main(int argc, char** argv) {
  int rows = 200000;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--rows") == 0 && i + 1 < argc) {
      rows = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      hci::par::set_threads(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--rows N] [--threads N]\n", argv[0]);
      return 1;
    }
  }
  std::printf("rows=%d threads=%d\n", rows, hci::par::max_threads());

  const hci::GeneratorConfig config = hci::GeneratorConfig::defaults();
  const hci::MarketState state = hci::MarketState::neutral(hci::Date::parse("2026-01-05"));
  std::vector<Row> table;

  hci::Snapshot snap_s, snap_p;
  {
    Row r{"generate_snapshot", 0, 0, false};
    r.serial_ms = timed([&] { snap_s = generate_snapshot(config, state, rows, 7, Exec::serial); });
    r.parallel_ms =
        timed([&] { snap_p = generate_snapshot(config, state, rows, 7, Exec::parallel); });
    r.identical = same_snapshot(snap_s, snap_p);
    table.push_back(r);
  }

  hci::BaselinePredictor fit_s, fit_p;
  {
    Row r{"fit_linear", 0, 0, false};
    r.serial_ms = timed([&] { fit_s = fit_linear(snap_s, nullptr, Exec::serial); });
    r.parallel_ms = timed([&] { fit_p = fit_linear(snap_p, nullptr, Exec::parallel); });
    r.identical = save_model_json(fit_s) == save_model_json(fit_p);
    table.push_back(r);
  }
  fit_s.calibration = calibrate(snap_s, fit_s, Exec::serial);
  fit_p.calibration = fit_s.calibration;

  hci::RatioSet ratios_s, ratios_p;
  {
    Row r{"compute_ratios", 0, 0, false};
    r.serial_ms = timed([&] { ratios_s = compute_ratios(snap_s, fit_s, Exec::serial); });
    r.parallel_ms = timed([&] { ratios_p = compute_ratios(snap_p, fit_p, Exec::parallel); });
    r.identical = ratios_s.ratio == ratios_p.ratio;
    table.push_back(r);
  }

  {
    Row r{"group_stats+hci", 0, 0, false};
    double h_s = 0.0, h_p = 0.0;
    const hci::WeightVector w = fit_s.calibration.baseline_weights;
    r.serial_ms = timed([&] {
      const auto st = group_stats(ratios_s, hci::Scheme::CaratClass, Exec::serial);
      h_s = compute_hci(st, w, fit_s.calibration, hci::Statistic::Mean).headline;
    });
    r.parallel_ms = timed([&] {
      const auto st = group_stats(ratios_p, hci::Scheme::CaratClass, Exec::parallel);
      h_p = compute_hci(st, w, fit_p.calibration, hci::Statistic::Mean).headline;
    });
    r.identical = same_bits(h_s, h_p);
    table.push_back(r);
  }

  {
    Row r{"bootstrap_ci", 0, 0, false};
    const auto groups = group_ratio_values(ratios_s);
    const hci::WeightVector w = fit_s.calibration.baseline_weights;
    hci::CiResult ci_s, ci_p;
    r.serial_ms = timed([&] {
      ci_s = bootstrap_ci(groups, w, fit_s.calibration, hci::Statistic::Mean, 0.95, 400, 11,
                          Exec::serial);
    });
    r.parallel_ms = timed([&] {
      ci_p = bootstrap_ci(groups, w, fit_p.calibration, hci::Statistic::Mean, 0.95, 400, 11,
                          Exec::parallel);
    });
    r.identical = same_bits(ci_s.lower, ci_p.lower) && same_bits(ci_s.upper, ci_p.upper);
    table.push_back(r);
  }

  {
    const int trees = rows <= 50000 ? 40 : 16;
    hci::ForestParams params;
    params.n_trees = trees;
    params.max_depth = 8;
    Row r{"fit_forest", 0, 0, false};
    hci::BaselinePredictor f_s, f_p;
    r.serial_ms = timed([&] { f_s = fit_forest(snap_s, params, 3, Exec::serial); });
    r.parallel_ms = timed([&] { f_p = fit_forest(snap_p, params, 3, Exec::parallel); });
    r.identical = save_model_json(f_s) == save_model_json(f_p);
    table.push_back(r);
  }

  std::printf("%-18s %12s %12s %9s %10s\n", "kernel", "serial(ms)", "parallel(ms)", "speedup",
              "identical");
  bool all_ok = true;
  for (const auto& r : table) {
    std::printf("%-18s %12.1f %12.1f %8.2fx %10s\n", r.name, r.serial_ms, r.parallel_ms,
                r.serial_ms / (r.parallel_ms > 0 ? r.parallel_ms : 1e-9),
                r.identical ? "yes" : "NO");
    all_ok = all_ok && r.identical;
  }
  if (!all_ok) {
    std::fprintf(stderr, "FAIL: parallel kernels diverge from the serial reference\n");
    return 1;
  }
  return 0;
}
