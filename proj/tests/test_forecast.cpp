#include <doctest.h>

#include <cmath>
#include <vector>

#include "hci/forecast.hpp"
#include "hci/rng.hpp"

using namespace hci;

namespace {

constexpr double kZ80 = 1.2815515655446004;  // standard normal 0.90 quantile

std::vector<double> linear_series(int n, double a, double b) {
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) x[t] = a + b * t;
  return x;
}

// Single-source-of-error state-space simulation whose optimal Holt smoothing
// parameters are exactly (alpha, beta).
std::vector<double> ssoe_series(int n, double alpha, double beta, std::uint64_t seed) {
  const CounterRng rng(seed, 0);
  std::vector<double> x(n);
  double level = 100.0, trend = 0.5;
  for (int t = 0; t < n; ++t) {
    const double e = rng.normal(static_cast<std::uint64_t>(t));
    x[t] = level + trend + e;
    const double new_level = level + trend + alpha * e;
    trend = trend + alpha * beta * e;
    level = new_level;
  }
  return x;
}

std::vector<double> ar1_series(int n, double phi, double sd, std::uint64_t seed) {
  const CounterRng rng(seed, 0);
  std::vector<double> x;
  double v = 0.0;
  for (int t = 0; t < n + 200; ++t) {
    v = phi * v + sd * rng.normal(static_cast<std::uint64_t>(t));
    if (t >= 200) x.push_back(v);
  }
  return x;
}

}  // namespace

TEST_SUITE("forecast") {

TEST_CASE("holt reproduces a deterministic trend exactly") {
  const std::vector<double> x = linear_series(24, 10.0, 2.0);
  const HoltFit fit = fit_holt(x);
  CHECK(fit.sse == doctest::Approx(0.0).epsilon(1e-18));
  CHECK(fit.residual_variance == doctest::Approx(0.0).epsilon(1e-18));
  CHECK(fit.level == doctest::Approx(10.0 + 2.0 * 23).epsilon(1e-9));
  CHECK(fit.trend == doctest::Approx(2.0).epsilon(1e-9));
  const ForecastResult fc = forecast_holt(fit, 3);
  REQUIRE(fc.point.size() == 3);
  for (int h = 1; h <= 3; ++h) {
    CHECK(fc.point[h - 1] == doctest::Approx(10.0 + 2.0 * (23 + h)).epsilon(1e-9));
    CHECK(fc.upper[h - 1] - fc.lower[h - 1] == doctest::Approx(0.0).epsilon(1e-9));
  }
  CHECK(fc.method == "holt");
  CHECK(fc.level == 0.80);
}

TEST_CASE("holt on a constant series has no trend") {
  const HoltFit fit = fit_holt(std::vector<double>(15, 42.0));
  CHECK(fit.trend == doctest::Approx(0.0).epsilon(1e-12));
  const ForecastResult fc = forecast_holt(fit, 2);
  CHECK(fc.point[0] == doctest::Approx(42.0).epsilon(1e-9));
}

TEST_CASE("holt input validation") {
  CHECK_THROWS_AS(fit_holt(linear_series(9, 0.0, 1.0)), DataError);
  const std::vector<double> x = linear_series(20, 0.0, 1.0);
  CHECK_THROWS_AS(fit_holt_fixed(x, 0.0, 0.5), DataError);
  CHECK_THROWS_AS(fit_holt_fixed(x, 1.2, 0.5), DataError);
  CHECK_THROWS_AS(fit_holt_fixed(x, 0.5, -0.1), DataError);
  std::vector<double> with_nan = x;
  with_nan[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_holt(with_nan), DataError);
}

TEST_CASE("holt recovers state-space smoothing parameters") {
  const std::vector<double> x = ssoe_series(500, 0.3, 0.1, 2024);
  const HoltFit fit = fit_holt(x);
  CHECK(std::abs(fit.alpha - 0.3) < 0.1);
  CHECK(std::abs(fit.beta - 0.1) < 0.1);
  CHECK(fit.residual_variance == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("holt one-step width uses the residual standard deviation") {
  const std::vector<double> x = ssoe_series(200, 0.4, 0.2, 7);
  const HoltFit fit = fit_holt_fixed(x, 0.4, 0.2);
  const ForecastResult fc = forecast_holt(fit, 6);
  const double sd1 = std::sqrt(fit.residual_variance);
  CHECK(fc.sd[0] == doctest::Approx(sd1).epsilon(1e-12));
  CHECK(fc.upper[0] - fc.lower[0] == doctest::Approx(2 * kZ80 * sd1).epsilon(1e-9));
  for (std::size_t h = 1; h < fc.sd.size(); ++h) {
    CHECK(fc.sd[h] > fc.sd[h - 1]);  // alpha > 0 widens every step
    const double vh = fc.sd[h] / sd1;
    double expect = 1.0;
    for (std::size_t j = 1; j <= h; ++j) {
      expect += std::pow(0.4 + j * 0.4 * 0.2, 2.0);
    }
    CHECK(vh * vh == doctest::Approx(expect).epsilon(1e-9));
  }
  const ForecastResult narrow = forecast_holt(fit, 2, 0.5);
  CHECK(narrow.upper[0] - narrow.lower[0] < fc.upper[0] - fc.lower[0]);
  CHECK_THROWS_AS(forecast_holt(fit, 0), DataError);
  CHECK_THROWS_AS(forecast_holt(fit, 2, 1.0), DataError);
}

TEST_CASE("holt forecasts are affine equivariant") {
  const std::vector<double> x = ssoe_series(120, 0.3, 0.1, 99);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i] + 100.0;
  const HoltFit fx = fit_holt_fixed(x, 0.35, 0.15);
  const HoltFit fy = fit_holt_fixed(y, 0.35, 0.15);
  const ForecastResult rx = forecast_holt(fx, 4);
  const ForecastResult ry = forecast_holt(fy, 4);
  for (int h = 0; h < 4; ++h) {
    CHECK(ry.point[h] == doctest::Approx(2.0 * rx.point[h] + 100.0).epsilon(1e-9));
    CHECK(ry.sd[h] == doctest::Approx(2.0 * rx.sd[h]).epsilon(1e-9));
  }
}

TEST_CASE("ar on white noise estimates a near-zero coefficient") {
  const std::vector<double> x = ar1_series(2000, 0.0, 1.0, 31);
  const ArFit fit = fit_ar_diff(x, 1, 0);
  CHECK(std::abs(fit.phi[0]) < 2.0 / std::sqrt(2000.0));
  CHECK(fit.sigma2 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("ar recovers a known autoregression") {
  const std::vector<double> x = ar1_series(1000, 0.6, 1.0, 47);
  const ArFit fit = fit_ar_diff(x, 1, 0);
  CHECK(std::abs(fit.phi[0] - 0.6) < 0.07);
  CHECK(fit.p == 1);
  CHECK(fit.d == 0);
}

TEST_CASE("a random walk differences to white noise") {
  const CounterRng rng(5, 0);
  std::vector<double> x = {0.0};
  for (int t = 1; t < 1200; ++t) {
    x.push_back(x.back() + rng.normal(static_cast<std::uint64_t>(t)));
  }
  const ArFit fit = fit_ar_diff(x, 1, 1);
  CHECK(std::abs(fit.phi[0]) < 0.07);
}

TEST_CASE("closed-form forecast for a zero-coefficient integrated model") {
  ArFit fit;
  fit.p = 1;
  fit.d = 1;
  fit.phi = {0.0};
  fit.intercept = 0.0;
  fit.sigma2 = 4.0;
  fit.n = 50;
  fit.diff_tail = {0.0};
  fit.level_tails = {1234.5};
  const ForecastResult fc = forecast_ar(fit, 5);
  for (int h = 1; h <= 5; ++h) {
    CHECK(fc.point[h - 1] == doctest::Approx(1234.5).epsilon(1e-12));
    CHECK(fc.sd[h - 1] == doctest::Approx(2.0 * std::sqrt(double(h))).epsilon(1e-12));
    CHECK(fc.upper[h - 1] ==
          doctest::Approx(1234.5 + kZ80 * 2.0 * std::sqrt(double(h))).epsilon(1e-9));
  }
  CHECK(fc.method == "ar");
}

TEST_CASE("one-step ar forecast matches the recursion by hand") {
  const std::vector<double> x = ar1_series(300, 0.5, 1.0, 8);
  const ArFit fit = fit_ar_diff(x, 1, 0);
  const ForecastResult fc = forecast_ar(fit, 1);
  CHECK(fc.point[0] ==
        doctest::Approx(fit.intercept + fit.phi[0] * x.back()).epsilon(1e-12));
  CHECK(fc.sd[0] == doctest::Approx(std::sqrt(fit.sigma2)).epsilon(1e-12));
}

TEST_CASE("order search never loses to a fixed candidate") {
  const std::vector<double> x = ar1_series(400, 0.4, 1.0, 90);
  const ArFit best = fit_ar_diff_auto(x);
  const ArFit fixed = fit_ar_diff(x, 1, 1);
  CHECK(best.aicc <= fixed.aicc);
  CHECK(best.d <= 2);
  CHECK(best.p >= 1);
  CHECK(best.p <= 5);
}

TEST_CASE("ar input validation") {
  const std::vector<double> x = linear_series(12, 0.0, 1.0);
  CHECK_THROWS_AS(fit_ar_diff(x, 2, 1), DataError);  // 11 diffs < 10p
  CHECK_THROWS_AS(fit_ar_diff(x, -1, 0), DataError);
  CHECK_THROWS_AS(fit_ar_diff(x, 6, 0), DataError);
  CHECK_THROWS_AS(fit_ar_diff(x, 1, 3), DataError);
  CHECK_THROWS_AS(fit_ar_diff_auto(std::vector<double>{1, 2, 3}), DataError);
}

TEST_CASE("misspecified ar is less confident than well-specified holt") {
  const std::vector<double> x = ssoe_series(300, 0.3, 0.1, 55);
  const HoltFit holt = fit_holt(x);
  const ArFit ar = fit_ar_diff(x, 1, 1);
  const ForecastResult fh = forecast_holt(holt, 4);
  const ForecastResult fa = forecast_ar(ar, 4);
  CHECK(fa.upper[3] - fa.lower[3] > fh.upper[3] - fh.lower[3]);
}

}  // TEST_SUITE
