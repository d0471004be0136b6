#include "sgl/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "sgl/errors.hpp"
#include "sgl/stats.hpp"

namespace sgl {

namespace {

std::size_t first_after(const std::vector<double>& times, double burn_in) {
  return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), burn_in - 1e-12) - times.begin());
}

double z_score(double diff, double se) {
  if (diff == 0.0) return 0.0;
  if (se <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(diff) / se;
}

}  // namespace

CesaroSeries cesaro_mean(const std::vector<double>& times, const std::vector<double>& values, double burn_in,
                         const std::string& name) {
  if (times.size() != values.size()) throw ValidationError("series_mismatch", "times and values differ in length");
  CesaroSeries out;
  out.observable = name;
  const std::size_t start = first_after(times, burn_in);
  double m = 0.0;
  std::span<const double> v(values);
  for (std::size_t k = start; k < times.size(); ++k) {
    m += (values[k] - m) / static_cast<double>(k - start + 1);
    out.times.push_back(times[k]);
    out.running_mean.push_back(m);
    out.standard_error.push_back(batch_means_stderr(v.subspan(start, k - start + 1)));
  }
  return out;
}

CesaroSeries cesaro_mean_ensemble(const std::vector<double>& times, const std::vector<std::vector<double>>& values,
                                  double burn_in, const std::string& name) {
  if (values.empty()) throw ValidationError("ensemble_empty", "ensemble has no realizations");
  std::vector<CesaroSeries> per;
  per.reserve(values.size());
  for (const auto& v : values) per.push_back(cesaro_mean(times, v, burn_in, name));
  CesaroSeries out;
  out.observable = name;
  out.times = per.front().times;
  const double r = static_cast<double>(per.size());
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    std::vector<double> col;
    col.reserve(per.size());
    for (const auto& s : per) col.push_back(s.running_mean[k]);
    out.running_mean.push_back(mean(col));
    out.standard_error.push_back(per.size() > 1 ? std::sqrt(variance(col) / r) : per.front().standard_error[k]);
  }
  return out;
}

double stationarity_test(const std::vector<double>& times, const std::vector<double>& values, double burn_in,
                         int windows) {
  if (windows < 2) throw ValidationError("windows_invalid", "stationarity test needs at least two windows");
  if (times.size() != values.size()) throw ValidationError("series_mismatch", "times and values differ in length");
  const std::size_t start = first_after(times, burn_in);
  const std::size_t n = times.size() - start;
  const std::size_t len = n / static_cast<std::size_t>(windows);
  if (len < 4) throw ValidationError("windows_too_short", "each window needs at least four samples");
  std::span<const double> v(values);
  std::vector<double> m, se;
  for (int w = 0; w < windows; ++w) {
    const auto part = v.subspan(start + static_cast<std::size_t>(w) * len, len);
    m.push_back(mean(part));
    se.push_back(batch_means_stderr(part));
  }
  double score = 0.0;
  for (int i = 0; i < windows; ++i)
    for (int j = i + 1; j < windows; ++j)
      score = std::max(score, z_score(m[i] - m[j], std::sqrt(se[i] * se[i] + se[j] * se[j])));
  return score;
}

HomogeneityResult homogeneity_test(const HomogeneityInput& in) {
  if (in.shifts.empty() || in.series.size() != in.shifts.size())
    throw ValidationError("homogeneity_input", "one series block per shift is required");
  for (double s : in.shifts) {
    Window w = in.window;
    for (int k = 0; k < in.grid.d; ++k) w.center[k] += s;
    w.validate_in(in.grid);
  }
  const std::size_t reals = in.series.front().size();
  if (reals < 2) throw ValidationError("homogeneity_input", "need at least two realizations");
  std::vector<std::vector<double>> means(in.shifts.size(), std::vector<double>(reals));
  const std::size_t start = first_after(in.times, in.burn_in);
  for (std::size_t s = 0; s < in.shifts.size(); ++s) {
    if (in.series[s].size() != reals) throw ValidationError("homogeneity_input", "realization count differs by shift");
    for (std::size_t r = 0; r < reals; ++r) {
      const auto& v = in.series[s][r];
      means[s][r] = mean(std::span<const double>(v).subspan(start));
    }
  }
  std::size_t base = 0;
  for (std::size_t s = 0; s < in.shifts.size(); ++s)
    if (in.shifts[s] == 0.0) base = s;
  HomogeneityResult out;
  out.shifts = in.shifts;
  for (std::size_t s = 0; s < in.shifts.size(); ++s) {
    std::vector<double> d(reals);
    for (std::size_t r = 0; r < reals; ++r) d[r] = means[s][r] - means[base][r];
    const double md = mean(d);
    const double se = std::sqrt(variance(d) / static_cast<double>(reals));
    out.mean.push_back(mean(means[s]));
    out.mean_diff.push_back(md);
    out.stderr_diff.push_back(se);
    out.z.push_back(z_score(md, se));
    out.score = std::max(out.score, out.z.back());
  }
  return out;
}

TightnessReport tightness(const std::vector<double>& times, const std::vector<std::vector<double>>& hm_ul,
                          double burn_in, const std::vector<double>& radius_grid, int m) {
  TightnessReport out;
  out.m = m;
  out.radius_grid = radius_grid;
  const std::size_t start = first_after(times, burn_in);
  std::vector<double> all;
  for (const auto& v : hm_ul) all.insert(all.end(), v.begin() + static_cast<std::ptrdiff_t>(start), v.end());
  std::sort(all.begin(), all.end());
  for (double r : radius_grid) {
    const auto cnt = std::upper_bound(all.begin(), all.end(), r) - all.begin();
    out.occupancy.push_back(all.empty() ? 0.0 : static_cast<double>(cnt) / static_cast<double>(all.size()));
  }
  return out;
}

}  // namespace sgl
