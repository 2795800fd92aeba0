#include "hci/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hci/rng.hpp"

namespace hci {

namespace {

struct HoltState {
  double level = 0.0;
  double trend = 0.0;
  double sse = 0.0;
};

HoltState run_holt(const std::vector<double>& x, double alpha, double beta) {
  HoltState s{x[0], x[1] - x[0], 0.0};
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double f = s.level + s.trend;
    const double e = x[t] - f;
    s.sse += e * e;
    const double l = alpha * x[t] + (1.0 - alpha) * f;
    s.trend = beta * (l - s.level) + (1.0 - beta) * s.trend;
    s.level = l;
  }
  return s;
}

void check_holt_series(const std::vector<double>& x) {
  if (x.size() < 10) throw DataError("Holt fitting needs at least 10 observations");
  for (const double v : x) {
    if (!std::isfinite(v)) throw DataError("series contains a non-finite value");
  }
}

HoltFit make_holt_fit(const std::vector<double>& x, double alpha, double beta) {
  const HoltState s = run_holt(x, alpha, beta);
  HoltFit fit;
  fit.alpha = alpha;
  fit.beta = beta;
  fit.level = s.level;
  fit.trend = s.trend;
  fit.sse = s.sse;
  fit.residual_variance = s.sse / static_cast<double>(x.size() - 2);
  fit.n = static_cast<int>(x.size());
  return fit;
}

std::vector<double> difference(const std::vector<double>& x) {
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

void check_forecast_args(int horizon, double level) {
  if (horizon < 1) throw DataError("forecast horizon must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw DataError("confidence level must lie in (0, 1)");
}

}  // namespace

HoltFit fit_holt_fixed(const std::vector<double>& x, double alpha, double beta) {
  check_holt_series(x);
  if (!(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0)) {
    throw DataError("smoothing parameters must lie in (0, 1]");
  }
  return make_holt_fit(x, alpha, beta);
}

HoltFit fit_holt(const std::vector<double>& x) {
  check_holt_series(x);
  double best_a = 0.05;
  double best_b = 0.05;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 20; ++i) {
    for (int j = 1; j <= 20; ++j) {
      const double a = 0.05 * i;
      const double b = 0.05 * j;
      const double sse = run_holt(x, a, b).sse;
      if (sse < best_sse) {
        best_sse = sse;
        best_a = a;
        best_b = b;
      }
    }
  }
  // Compass pattern search around the grid optimum.
  const auto clamp01 = [](double v) { return std::clamp(v, 1e-4, 1.0); };
  double step = 0.025;
  while (step >= 1e-4) {
    bool moved = false;
    const double trials[4][2] = {{best_a + step, best_b},
                                 {best_a - step, best_b},
                                 {best_a, best_b + step},
                                 {best_a, best_b - step}};
    for (const auto& t : trials) {
      const double a = clamp01(t[0]);
      const double b = clamp01(t[1]);
      const double sse = run_holt(x, a, b).sse;
      if (sse < best_sse) {
        best_sse = sse;
        best_a = a;
        best_b = b;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return make_holt_fit(x, best_a, best_b);
}

ForecastResult forecast_holt(const HoltFit& fit, int horizon, double level) {
  check_forecast_args(horizon, level);
  const double z = normal_quantile(0.5 * (1.0 + level));
  ForecastResult res;
  res.method = "holt";
  res.level = level;
  double v = 1.0;
  for (int h = 1; h <= horizon; ++h) {
    const double point = fit.level + h * fit.trend;
    const double sd = std::sqrt(std::max(0.0, fit.residual_variance) * v);
    res.point.push_back(point);
    res.sd.push_back(sd);
    res.lower.push_back(point - z * sd);
    res.upper.push_back(point + z * sd);
    const double term = fit.alpha + h * fit.alpha * fit.beta;  // enters v_{h+1}
    v += term * term;
  }
  return res;
}

ArFit fit_ar_diff(const std::vector<double>& x, int p, int d) {
  if (p < 0 || p > 5) throw DataError("AR order must lie in 0..5");
  if (d < 0 || d > 2) throw DataError("differencing order must lie in 0..2");
  for (const double v : x) {
    if (!std::isfinite(v)) throw DataError("series contains a non-finite value");
  }
  std::vector<double> w = x;
  ArFit fit;
  fit.p = p;
  fit.d = d;
  fit.n = static_cast<int>(x.size());
  for (int k = 0; k < d; ++k) {
    if (w.size() < 2) throw DataError("series too short to difference");
    fit.level_tails.push_back(w.back());
    w = difference(w);
  }
  const auto t0 = static_cast<std::ptrdiff_t>(w.size());
  const std::ptrdiff_t min_len = std::max<std::ptrdiff_t>(10 * p, 5);
  if (t0 < min_len) {
    throw DataError("series too short for AR(" + std::to_string(p) + ") after " +
                    std::to_string(d) + " differences");
  }
  const std::ptrdiff_t t = t0 - p;  // usable observations
  Eigen::MatrixXd xm(t, p + 1);
  Eigen::VectorXd y(t);
  for (std::ptrdiff_t r = 0; r < t; ++r) {
    const std::ptrdiff_t idx = p + r;
    y(r) = w[static_cast<std::size_t>(idx)];
    xm(r, 0) = 1.0;
    for (int i = 1; i <= p; ++i) {
      xm(r, i) = w[static_cast<std::size_t>(idx - i)];
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xm);
  const Eigen::VectorXd beta = qr.solve(y);
  const double sse = (y - xm * beta).squaredNorm();
  fit.intercept = beta(0);
  fit.phi.resize(static_cast<std::size_t>(p));
  for (int i = 1; i <= p; ++i) fit.phi[static_cast<std::size_t>(i - 1)] = beta(i);
  const auto tn = static_cast<double>(t);
  fit.sigma2 = sse / tn;
  const double k = p + 2;  // coefficients + intercept + variance
  if (tn - k - 1.0 <= 0.0) throw DataError("too few observations for AICc");
  fit.aicc = tn * std::log(std::max(fit.sigma2, 1e-300)) + 2.0 * k * tn / (tn - k - 1.0);
  fit.diff_tail.assign(w.end() - p, w.end());
  return fit;
}

ArFit fit_ar_diff_auto(const std::vector<double>& x, int max_p, int max_d) {
  if (max_p < 0 || max_p > 5 || max_d < 0 || max_d > 2) {
    throw DataError("order search bounds must satisfy p <= 5, d <= 2");
  }
  bool found = false;
  ArFit best;
  for (int d = 0; d <= max_d; ++d) {
    for (int p = 0; p <= max_p; ++p) {
      ArFit fit;
      try {
        fit = fit_ar_diff(x, p, d);
      } catch (const DataError&) {
        continue;
      }
      if (!found || fit.aicc < best.aicc) {
        best = std::move(fit);
        found = true;
      }
    }
  }
  if (!found) throw DataError("series too short for any candidate AR order");
  return best;
}

ForecastResult forecast_ar(const ArFit& fit, int horizon, double level) {
  check_forecast_args(horizon, level);
  const auto p = static_cast<std::size_t>(fit.p);
  if (fit.phi.size() != p || fit.diff_tail.size() != p ||
      fit.level_tails.size() != static_cast<std::size_t>(fit.d)) {
    throw DataError("inconsistent AR model state");
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  ForecastResult res;
  res.method = "ar";
  res.level = level;

  // Psi weights of the AR part, then integrate d times by prefix sums.
  std::vector<double> psi(static_cast<std::size_t>(horizon), 0.0);
  psi[0] = 1.0;
  for (std::size_t j = 1; j < psi.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 1; i <= std::min(j, p); ++i) {
      s += fit.phi[i - 1] * psi[j - i];
    }
    psi[j] = s;
  }
  for (int k = 0; k < fit.d; ++k) {
    for (std::size_t j = 1; j < psi.size(); ++j) psi[j] += psi[j - 1];
  }

  std::vector<double> hist = fit.diff_tail;  // oldest..newest
  // level_tails holds the last value at each differencing stage, outermost
  // first (original series, then first difference, ...).
  std::vector<double> levels = fit.level_tails;
  double var = 0.0;
  for (int h = 1; h <= horizon; ++h) {
    double w = fit.intercept;
    for (std::size_t i = 1; i <= p; ++i) {
      w += fit.phi[i - 1] * hist[hist.size() - i];
    }
    hist.push_back(w);
    double value = w;
    for (std::size_t l = levels.size(); l-- > 0;) {
      value += levels[l];
      levels[l] = value;
    }
    const double psi_h = psi[static_cast<std::size_t>(h - 1)];
    var += psi_h * psi_h * fit.sigma2;
    const double sd = std::sqrt(std::max(0.0, var));
    res.point.push_back(value);
    res.sd.push_back(sd);
    res.lower.push_back(value - z * sd);
    res.upper.push_back(value + z * sd);
  }
  return res;
}

}  // namespace hci
