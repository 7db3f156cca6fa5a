#include "nailfem/rates.hpp"

#include <algorithm>
#include <cmath>

namespace nailfem {

namespace {

RateFit fit_window(const Series& series, int first, int last) {
  int n = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = first; i <= last; ++i) {
    const auto [x, y] = series[i];
    if (!(x > 0.0 && y > 0.0)) {
      throw Error("fit_rate: nonpositive point inside the fit window");
    }
    const double lx = std::log(x), ly = std::log(y);
    ++n;
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  if (n < 4) {
    throw Error("fit_rate: need at least 4 points in the window, got " +
                std::to_string(n));
  }
  RateFit fit;
  fit.window = {first, last};
  const double det = n * sxx - sx * sx;
  if (det == 0.0) throw Error("fit_rate: degenerate abscissae");
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double ymean = sy / n;
  for (int i = first; i <= last; ++i) {
    const double ly = std::log(series[i].second);
    const double pred = fit.intercept + fit.slope * std::log(series[i].first);
    ss_res += (ly - pred) * (ly - pred);
    ss_tot += (ly - ymean) * (ly - ymean);
  }
  fit.r_squared = (ss_tot == 0.0) ? 1.0 : std::max(0.0, 1.0 - ss_res / ss_tot);
  return fit;
}

}  // namespace

RateFit fit_rate(const Series& series, double last_fraction) {
  if (!(last_fraction > 0.0 && last_fraction <= 1.0)) {
    throw Error("fit_rate: last_fraction must lie in (0, 1]");
  }
  const int n = static_cast<int>(series.size());
  const int count = std::max(4, static_cast<int>(std::ceil(n * last_fraction)));
  if (count > n) throw Error("fit_rate: insufficient points");
  return fit_window(series, n - count, n - 1);
}

RateFit fit_rate_last_decade(const Series& series) {
  if (series.empty()) throw Error("fit_rate: empty series");
  double xmax = 0.0;
  for (const auto& [x, y] : series) xmax = std::max(xmax, x);
  int first = 0;
  while (first < static_cast<int>(series.size()) &&
         series[first].first < xmax / 10.0) {
    ++first;
  }
  return fit_window(series, first, static_cast<int>(series.size()) - 1);
}

}  // namespace nailfem
