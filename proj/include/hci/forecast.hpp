#pragma once

#include <string>
#include <vector>

#include "hci/domain.hpp"

namespace hci {

// Holt linear-trend exponential smoothing:
//   l_t = a x_t + (1-a)(l_{t-1} + b_{t-1}),  b_t = B (l_t - l_{t-1}) + (1-B) b_{t-1}
// with l_1 = x_1, b_1 = x_2 - x_1.
struct HoltFit {
  double alpha = 0.0;
  double beta = 0.0;
  double level = 0.0;  // final smoothed level
  double trend = 0.0;  // final smoothed trend
  double sse = 0.0;    // one-step squared errors from t = 2
  double residual_variance = 0.0;
  int n = 0;
};

// Minimizes one-step SSE over (alpha, beta) in (0,1]^2: 0.05 grid, then local
// refinement to 1e-4. Requires at least 10 observations.
HoltFit fit_holt(const std::vector<double>& x);
HoltFit fit_holt_fixed(const std::vector<double>& x, double alpha, double beta);

struct ForecastResult {
  std::string method;  // holt | ar
  double level = 0.0;  // confidence level of the bounds
  std::vector<double> point;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> sd;
};

// Point h-step forecast l + h*b; interval l + h*b +- z * sqrt(var * v_h) with
// v_h = 1 + sum_{j=1}^{h-1} (alpha + j*alpha*beta)^2.
ForecastResult forecast_holt(const HoltFit& fit, int horizon, double level = 0.80);

// Conditional least-squares AR(p) on the d-times differenced series.
struct ArFit {
  int p = 0;
  int d = 0;
  std::vector<double> phi;
  double intercept = 0.0;
  double sigma2 = 0.0;
  double aicc = 0.0;
  int n = 0;                        // original series length
  std::vector<double> diff_tail;    // last p values of the differenced series
  std::vector<double> level_tails;  // last value of each of the d undifferenced levels
};

ArFit fit_ar_diff(const std::vector<double>& x, int p, int d);

// Minimum-AICc order over p <= max_p, d <= max_d; ties prefer smaller d, then p.
ArFit fit_ar_diff_auto(const std::vector<double>& x, int max_p = 5, int max_d = 2);

// AR recursion on the differenced scale, integrated d times; forecast sd
// accumulates through the psi weights of the integrated representation.
ForecastResult forecast_ar(const ArFit& fit, int horizon, double level = 0.80);

}  // namespace hci
