#include "sgl/stats.hpp"

#include <cmath>

#include "sgl/errors.hpp"

namespace sgl {

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_size_mismatch", "x and y lengths differ");
  LinearFit f;
  f.n = x.size();
  if (f.n == 0) {
    f.degenerate = true;
    return f;
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (f.n < 2 || sxx <= 0.0) {
    f.degenerate = true;
    f.intercept = my;
    return f;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.residual = std::sqrt(ss / static_cast<double>(f.n));
  if (f.n > 2) {
    const double s2 = ss / static_cast<double>(f.n - 2);
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(f.n) + mx * mx / sxx));
  }
  return f;
}

double mean(std::span<const double> v) {
  double m = 0.0;
  std::size_t k = 0;
  for (double x : v) m += (x - m) / static_cast<double>(++k);
  return m;
}

double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double batch_means_stderr(std::span<const double> v, int batches) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  std::size_t b = batches > 0 ? static_cast<std::size_t>(batches)
                              : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  b = std::max<std::size_t>(2, std::min(b, n));
  const std::size_t len = n / b;
  std::vector<double> means;
  means.reserve(b);
  for (std::size_t i = 0; i < b; ++i) means.push_back(mean(v.subspan(n - (b - i) * len, len)));
  return std::sqrt(variance(means) / static_cast<double>(b));
}

}  // namespace sgl
