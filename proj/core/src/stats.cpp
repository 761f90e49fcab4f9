#include "spindecay/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "spindecay/errors.hpp"

namespace spindecay {

double chi_square_quantile(int dof, double p) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

ChiSquareResult chi_square_test(const std::vector<long long>& observed,
                                const std::vector<double>& expected_prob, double alpha,
                                double min_expected) {
  if (observed.size() != expected_prob.size()) throw ParameterError("chi-square size mismatch");
  const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), 0LL));
  if (total <= 0) throw ParameterError("chi-square needs observations");
  std::vector<double> exp_bins, obs_bins;
  double pool_e = 0, pool_o = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_prob[i] * total;
    if (e < min_expected) {
      pool_e += e;
      pool_o += static_cast<double>(observed[i]);
    } else {
      exp_bins.push_back(e);
      obs_bins.push_back(static_cast<double>(observed[i]));
    }
  }
  if (pool_e > 0 || pool_o > 0) {
    if (pool_e < min_expected && !exp_bins.empty()) {
      // fold an undersized pool into the smallest regular bin
      auto it = std::min_element(exp_bins.begin(), exp_bins.end());
      const auto k = it - exp_bins.begin();
      exp_bins[k] += pool_e;
      obs_bins[k] += pool_o;
    } else {
      exp_bins.push_back(pool_e);
      obs_bins.push_back(pool_o);
    }
  }
  ChiSquareResult r;
  r.bins = static_cast<int>(exp_bins.size());
  r.dof = r.bins - 1;
  for (std::size_t i = 0; i < exp_bins.size(); ++i) {
    if (exp_bins[i] <= 0) {
      if (obs_bins[i] > 0) r.statistic = INFINITY;
      continue;
    }
    const double d = obs_bins[i] - exp_bins[i];
    r.statistic += d * d / exp_bins[i];
  }
  if (r.dof < 1) {
    r.critical = 0;
    r.pass = true;
    return r;
  }
  r.critical = chi_square_quantile(r.dof, 1.0 - alpha);
  r.pass = r.statistic <= r.critical;
  return r;
}

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ParameterError("least squares needs two or more points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Fit f;
  f.slope = sxx > 0 ? sxy / sxx : 0;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / static_cast<double>(n));
  return f;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double standard_error(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  const double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace spindecay
