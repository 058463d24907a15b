#include "ddsynth/stl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ddsynth {

namespace {

int next_odd(double v) {
  auto n = static_cast<int>(std::ceil(v));
  return n % 2 == 0 ? n + 1 : n;
}

double loess_at(const Eigen::Ref<const Eigen::VectorXd>& y, int q, double xs) {
  const auto n = static_cast<int>(y.size());
  int left = 0, right = n - 1;
  double h = 0.0;
  if (q >= n) {
    h = std::max(xs - left, right - xs) + (q - n) / 2;
  } else {
    const double ideal = xs - (q - 1) / 2.0;
    auto best_left = 0;
    double best_h = 1e300;
    for (int cand : {static_cast<int>(std::floor(ideal)), static_cast<int>(std::ceil(ideal))}) {
      cand = std::clamp(cand, 0, n - q);
      const double hh = std::max(xs - cand, cand + q - 1 - xs);
      if (hh < best_h) best_h = hh, best_left = cand;
    }
    left = best_left;
    right = left + q - 1;
    h = best_h;
  }
  const double lo = 0.001 * h, hi = 0.999 * h;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(right - left + 1);
  for (int j = left; j <= right; ++j) {
    const double r = std::abs(j - xs);
    if (r <= hi) w(j - left) = r <= lo ? 1.0 : std::pow(1.0 - std::pow(r / h, 3), 3);
  }
  const double total = w.sum();
  if (total <= 0.0) return y(std::clamp(static_cast<int>(std::lround(xs)), 0, n - 1));
  w /= total;
  double center = 0.0;
  for (int j = left; j <= right; ++j) center += w(j - left) * j;
  double c = 0.0;
  for (int j = left; j <= right; ++j) c += w(j - left) * (j - center) * (j - center);
  if (std::sqrt(c) > 0.001 * (n - 1)) {
    const double b = (xs - center) / c;
    for (int j = left; j <= right; ++j) w(j - left) *= b * (j - center) + 1.0;
  }
  double value = 0.0;
  for (int j = left; j <= right; ++j) value += w(j - left) * y(j);
  return value;
}

Eigen::VectorXd moving_average(const Eigen::VectorXd& x, Eigen::Index width) {
  Eigen::VectorXd out(x.size() - width + 1);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = x.segment(i, width).mean();
  return out;
}

}  // namespace

Eigen::VectorXd loess(const Eigen::Ref<const Eigen::VectorXd>& y, int window, const Eigen::Ref<const Eigen::VectorXd>& at) {
  Eigen::VectorXd out(at.size());
  if (y.size() == 1) return out.setConstant(y(0));
  for (Eigen::Index i = 0; i < at.size(); ++i) out(i) = loess_at(y, window, at(i));
  return out;
}

DecomposedSeries stl_decompose(const Eigen::Ref<const Eigen::VectorXd>& x, int period, const StlOptions& opts) {
  const auto n = static_cast<int>(x.size());
  if (period < 2) throw std::invalid_argument("STL period must be at least 2");
  if (n < 2 * period)
    throw SeriesTooShort("series of length " + std::to_string(n) + " is shorter than two periods (" +
                         std::to_string(period) + "); use decompose() for the fallback");
  const int ns = std::max(7, next_odd(opts.seasonal_window));
  const int nl = opts.low_pass_window > 0 ? opts.low_pass_window : next_odd(period);
  const int nt = opts.trend_window > 0 ? opts.trend_window : next_odd(1.5 * period / (1.0 - 1.5 / ns));

  Eigen::VectorXd trend = Eigen::VectorXd::Zero(n), seasonal(n);
  const Eigen::VectorXd positions = Eigen::VectorXd::LinSpaced(n, 0, n - 1);
  for (int iter = 0; iter < std::max(1, opts.inner_iterations); ++iter) {
    const Eigen::VectorXd detrended = x - trend;
    Eigen::VectorXd cycle(n + 2 * period);
    for (int k = 0; k < period; ++k) {
      const int m = (n - k + period - 1) / period;
      Eigen::VectorXd sub(m);
      for (int j = 0; j < m; ++j) sub(j) = detrended(k + j * period);
      const Eigen::VectorXd smoothed = loess(sub, ns, Eigen::VectorXd::LinSpaced(m + 2, -1, m));
      for (int j = 0; j < m + 2; ++j) cycle(k + j * period) = smoothed(j);
    }
    Eigen::VectorXd low = moving_average(moving_average(moving_average(cycle, period), period), 3);
    low = loess(low, nl, positions);
    seasonal = cycle.segment(period, n) - low;
    trend = loess(x - seasonal, nt, positions);
  }
  return {trend, seasonal, x - trend - seasonal};
}

int estimate_period(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto n = static_cast<int>(x.size());
  const int fallback = std::max(2, n / 8);
  if (n < 6) return fallback;
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0, n - 1);
  const double tm = t.mean(), xm = x.mean();
  const double slope = ((t.array() - tm) * (x.array() - xm)).sum() / (t.array() - tm).square().sum();
  const Eigen::VectorXd r = x.array() - xm - slope * (t.array() - tm);
  const double energy = r.squaredNorm();
  if (energy <= 1e-20 * std::max(1.0, (x.array() - xm).square().sum())) return fallback;
  const int max_lag = n / 2;
  Eigen::VectorXd acf(max_lag + 2);
  for (int l = 0; l <= max_lag + 1 && l < n; ++l) acf(l) = r.head(n - l).dot(r.tail(n - l)) / energy;
  int best = 0;
  double best_value = 0.0;
  for (int l = 2; l <= max_lag && l + 1 < n; ++l)
    if (acf(l) >= acf(l - 1) && acf(l) > acf(l + 1) && acf(l) > best_value) best = l, best_value = acf(l);
  return best >= 2 ? best : fallback;
}

DecomposedSeries decompose(const Eigen::Ref<const Eigen::VectorXd>& x, int period) {
  const auto n = static_cast<int>(x.size());
  if (n < 4) return {x, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  if (period <= 0) period = estimate_period(x);
  if (period < 2 || 2 * period > n) period = std::max(2, n / 8);
  return stl_decompose(x, period);
}

}  // namespace ddsynth
