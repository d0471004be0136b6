#include <doctest.h>
#include <gsl/gsl_fit.h>

#include <algorithm>
#include <cmath>

#include "sgl/errors.hpp"
#include "sgl/measures.hpp"
#include "sgl/observables.hpp"
#include "sgl/rng.hpp"
#include "sgl/stats.hpp"

using namespace sgl;

namespace {

std::vector<double> grid_times(std::size_t n, double dt = 0.5) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = i * dt;
  return t;
}

}  // namespace

TEST_CASE("least squares against GSL") {
  SplitMix rng(5);
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(rng.uniform(-3, 5));
    y.push_back(1.5 - 0.7 * x.back() + 0.2 * rng.normal());
  }
  double c0, c1, cov00, cov01, cov11, sumsq;
  gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
  const auto fit = least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(c1).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(c0).epsilon(1e-12));
  CHECK(fit.slope_se == doctest::Approx(std::sqrt(cov11)).epsilon(1e-10));
  CHECK(fit.intercept_se == doctest::Approx(std::sqrt(cov00)).epsilon(1e-10));
  const std::vector<double> same{2.0, 2.0, 2.0};
  CHECK(least_squares(same, std::vector<double>{1.0, 2.0, 3.0}).degenerate);
}

TEST_CASE("batch means standard error") {
  std::vector<double> c(100, 3.0);
  CHECK(batch_means_stderr(c) == 0.0);
  SplitMix rng(8);
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back(rng.normal());
  CHECK(batch_means_stderr(v) == doctest::Approx(0.01).epsilon(0.25));
  CHECK(mean(std::vector<double>{1.0, 2.0, 6.0}) == 3.0);
  CHECK(variance(std::vector<double>{1.0, 2.0, 6.0}) == doctest::Approx(7.0));
}

TEST_CASE("Cesaro mean of a constant") {
  const auto t = grid_times(50);
  const std::vector<double> v(50, 2.5);
  const auto s = cesaro_mean(t, v, 5.0, "c");
  CHECK(s.times.front() == 5.0);
  CHECK(s.observable == "c");
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    CHECK(s.running_mean[k] == doctest::Approx(2.5));
    CHECK(s.standard_error[k] == 0.0);
  }
}

TEST_CASE("Cesaro mean of a linear series") {
  const auto t = grid_times(101, 0.1);
  const auto s = cesaro_mean(t, t, 2.0);
  for (std::size_t k = 0; k < s.times.size(); ++k)
    CHECK(s.running_mean[k] == doctest::Approx(0.5 * (2.0 + s.times[k])).epsilon(1e-12));
}

TEST_CASE("Cesaro running mean stays below the running max") {
  SplitMix rng(13);
  const auto t = grid_times(500);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(std::abs(rng.normal()) + std::sin(0.1 * i));
  const auto s = cesaro_mean(t, v, 0.0);
  double run_max = -1e300;
  for (std::size_t k = 0; k < v.size(); ++k) {
    run_max = std::max(run_max, v[k]);
    CHECK(s.running_mean[k] <= run_max + 1e-12);
  }
}

TEST_CASE("Cesaro mean stabilizes on a stationary series") {
  SplitMix rng(21);
  const std::size_t n = 4096;
  const auto t = grid_times(n);
  std::vector<double> v;
  double ar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ar = 0.8 * ar + rng.normal();
    v.push_back(1.0 + ar);
  }
  // The last two dyadic windows agree within 3 standard errors.
  const std::span<const double> sv(v);
  const auto a = sv.subspan(n / 2, n / 4), b = sv.subspan(3 * n / 4, n / 4);
  const double se = std::hypot(batch_means_stderr(a), batch_means_stderr(b));
  CHECK(std::abs(mean(a) - mean(b)) < 3.0 * se);
}

TEST_CASE("ensemble Cesaro means") {
  const auto t = grid_times(20);
  const std::vector<std::vector<double>> v{std::vector<double>(20, 1.0), std::vector<double>(20, 3.0)};
  const auto s = cesaro_mean_ensemble(t, v, 0.0);
  CHECK(s.running_mean.back() == doctest::Approx(2.0));
  CHECK(s.standard_error.back() == doctest::Approx(1.0));
  CHECK_THROWS_AS(cesaro_mean_ensemble(t, {}, 0.0), ValidationError);
}

TEST_CASE("stationarity score") {
  const auto t = grid_times(1000);
  int below = 0;
  for (std::uint64_t s = 0; s < 300; ++s) {
    SplitMix rng(1000 + s);
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i) v.push_back(rng.normal());
    below += stationarity_test(t, v, 0.0, 2) < 3.0;
  }
  CHECK(below >= 291);

  SplitMix rng(3);
  std::vector<double> tr;
  for (int i = 0; i < 1000; ++i) tr.push_back(5.0 * std::exp(-0.01 * i) + 0.1 * rng.normal());
  CHECK(stationarity_test(t, tr, 0.0, 4) > 3.0);

  std::vector<double> dup;
  for (int w = 0; w < 4; ++w)
    for (int i = 0; i < 250; ++i) dup.push_back(std::sin(0.3 * i));
  CHECK(stationarity_test(t, dup, 0.0, 4) == 0.0);
  CHECK_THROWS_AS(stationarity_test(t, dup, 0.0, 1), ValidationError);
}

TEST_CASE("homogeneity test") {
  HomogeneityInput in;
  in.grid = Grid{1, 100.0, 256};
  in.window = Window{10.0, {0.0, 0.0}};
  in.shifts = {0.0, 10.0, 20.0};
  in.times = grid_times(40);
  SplitMix rng(4);
  in.series.resize(3);
  for (int s = 0; s < 3; ++s)
    for (int r = 0; r < 16; ++r) {
      std::vector<double> v;
      for (int k = 0; k < 40; ++k) v.push_back(1.0 + rng.normal());
      in.series[s].push_back(v);
    }
  const auto res = homogeneity_test(in);
  CHECK(res.z[0] == 0.0);
  CHECK(res.mean_diff[0] == 0.0);
  CHECK(res.score < 4.0);

  // A constant offset at one shift is detected.
  HomogeneityInput off = in;
  for (auto& v : off.series[2])
    for (double& x : v) x += 1.0;
  CHECK(homogeneity_test(off).score > 5.0);

  HomogeneityInput bad = in;
  bad.shifts = {0.0, 10.0, 50.0};
  CHECK_THROWS_AS(homogeneity_test(bad), ValidationError);
}

TEST_CASE("tightness occupancy") {
  const auto t = grid_times(10);
  std::vector<std::vector<double>> h;
  for (int r = 0; r < 3; ++r) {
    std::vector<double> v;
    for (int k = 0; k < 10; ++k) v.push_back(1.0 + r + 0.1 * k);
    h.push_back(v);
  }
  const double mx = 3.9;
  const auto rep = tightness(t, h, 1.0, {0.0, 1.5, 2.5, 3.0, 10.0 * mx}, 1);
  CHECK(rep.occupancy.front() == 0.0);
  CHECK(rep.occupancy.back() == 1.0);
  for (std::size_t i = 1; i < rep.occupancy.size(); ++i) CHECK(rep.occupancy[i] >= rep.occupancy[i - 1]);
  // Samples after burn-in: k >= 2, i.e. 8 per realization; values <= 1.5 are 1.2..1.5 (4 of 24).
  CHECK(rep.occupancy[1] == doctest::Approx(4.0 / 24.0));
}

TEST_CASE("observables") {
  const Grid g{1, 40.0, 128};
  Field f = Field::zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::polar(1.0 + 0.5 * std::cos(0.25 * g.point(i)[0]), 0.1 * i);
  ObservableEvaluator ev(g);

  Observable sup{"s", ObservableKind::sup_norm_window};
  sup.side = 10.0;
  CHECK(ev(sup, f) == doctest::Approx(sup_norm(f, Window{10.0, {0.0, 0.0}})));
  CHECK(ev(sup.shifted(5.0, 1), f) == doctest::Approx(sup_norm(f, Window{10.0, {5.0, 0.0}})));

  Observable l2{"l", ObservableKind::l2loc};
  l2.center = {3.0, 0.0};
  CHECK(ev(l2, f) == doctest::Approx(local_l2_norm(f, {0.2, {3.0, 0.0}})));

  Observable ul{"u", ObservableKind::hm_ul};
  CHECK(ev(ul, f) == doctest::Approx(hm_ul_norm(f, 0.2, 1).value));

  Observable mom{"m", ObservableKind::amplitude_moment};
  mom.p = 2.0;
  mom.side = 40.0 / 2;
  double acc = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.point(i)[0]) < 10.0 || g.point(i)[0] == -10.0) {
      acc += std::norm(f[i]);
      ++n;
    }
  CHECK(ev(mom, f) == doctest::Approx(acc / n));

  const Field c = Field::constant(g, cplx(0.0, 2.0));
  Observable cor{"c", ObservableKind::spatial_correlation};
  cor.lag = 2.0;
  CHECK(ev(cor, c) == doctest::Approx(4.0));
  CHECK(observable_kind_from_string("l2loc") == ObservableKind::l2loc);
  CHECK_THROWS_AS(observable_kind_from_string("energy"), ValidationError);
}
