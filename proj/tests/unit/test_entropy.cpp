#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "sgl/entropy.hpp"
#include "sgl/errors.hpp"
#include "sgl/norms.hpp"
#include "sgl/rng.hpp"
#include "sgl/spectral.hpp"

using namespace sgl;

namespace {

PointCloud constants(const std::vector<cplx>& values, std::size_t dim = 3) {
  PointCloud pc;
  for (const cplx& v : values) pc.push(std::vector<cplx>(dim, v));
  return pc;
}

// Minimum number of groups of diameter <= eps partitioning the points, by
// exhaustive assignment.
std::size_t brute_force_cover(const PointCloud& pc, double eps) {
  const std::size_t n = pc.size();
  std::vector<std::vector<std::size_t>> groups;
  std::size_t best = n;
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (groups.size() >= best) return;
    if (i == n) {
      best = groups.size();
      return;
    }
    for (std::size_t k = 0; k < groups.size(); ++k) {
      bool ok = true;
      for (std::size_t j : groups[k]) ok = ok && sup_distance(pc.row(i), pc.row(j), pc.dim) <= eps;
      if (!ok) continue;
      groups[k].push_back(i);
      go(i + 1);
      groups[k].pop_back();
    }
    groups.push_back({i});
    go(i + 1);
    groups.pop_back();
  };
  go(0);
  return best;
}

PointCloud concat(const PointCloud& a, const PointCloud& b) {
  PointCloud out;
  out.dim = a.dim + b.dim;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.data.insert(out.data.end(), a.row(i), a.row(i) + a.dim);
    out.data.insert(out.data.end(), b.row(i), b.row(i) + b.dim);
  }
  return out;
}

ForcingProfile forcing() {
  ForcingProfile p;
  p.modes.push_back({{0.5, 0.0}, 0.4, 0.0});
  p.modes.push_back({{0.5 * std::sqrt(2.0), 0.0}, 0.3, 0.2});
  return p;
}

ModelParams params() {
  ModelParams m;
  m.alpha = 0.5;
  m.beta = 1.5;
  return m;
}

SolverConfig solver(double dt = 0.02) {
  SolverConfig c;
  c.dt = dt;
  c.t_end = 1.0;
  c.record_norms = false;
  return c;
}

OrbitEnsemble small_orbits(std::size_t count, std::uint64_t seed, int n_max) {
  const Grid g{1, 64.0, 128};
  const auto r = sample_realization(forcing(), seed, 0.02);
  const auto snap = attractor_snapshot(g, r, params(), solver(), count, 4.0, 2.0, seed + 100);
  return build_orbits(snap, r.shifted(4.0), params(), solver(), 1.0, n_max);
}

}  // namespace

TEST_CASE("cover examples") {
  const PointCloud tri = constants({0.0, 1.0, std::polar(1.0, std::numbers::pi / 3)});
  for (auto m : {CoverMethod::exact, CoverMethod::greedy}) {
    CHECK(cover_count(tri, 0.5, m).count == 3);
    CHECK(cover_count(tri, 3.0, m).count == 1);
  }
  CHECK(cover_count(tri, 1.0, CoverMethod::exact).count == 1);
  CHECK_THROWS_AS(cover_count(constants(std::vector<cplx>(13, 0.0)), 1.0, CoverMethod::exact), ValidationError);
  CHECK_THROWS_AS(cover_count(tri, 0.0, CoverMethod::greedy), ValidationError);
  CHECK(cover_method_from_string("exact") == CoverMethod::exact);
}

TEST_CASE("exact covers match exhaustive assignment; greedy never below") {
  SplitMix rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 11;
    std::vector<cplx> v;
    for (std::size_t i = 0; i < n; ++i) v.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const PointCloud pc = constants(v, 1);
    for (double eps : {0.2, 0.5, 1.0}) {
      const auto exact = cover_count(pc, eps, CoverMethod::exact).count;
      CHECK(exact == brute_force_cover(pc, eps));
      CHECK(cover_count(pc, eps, CoverMethod::greedy).count >= exact);
    }
  }
}

TEST_CASE("greedy counts from one traversal") {
  SplitMix rng(2);
  PointCloud pc;
  for (int i = 0; i < 200; ++i) pc.push({cplx(rng.normal(), rng.normal()), cplx(rng.normal(), 0.0)});
  const std::vector<double> eps{2.0, 1.0, 0.5, 0.25};
  const auto counts = greedy_cover_counts(pc, eps);
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(counts[i] == cover_count(pc, eps[i], CoverMethod::greedy).count);
  for (std::size_t i = 1; i < eps.size(); ++i) CHECK(counts[i] >= counts[i - 1]);
}

TEST_CASE("partition entropy") {
  CHECK(partition_entropy({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK(partition_entropy({1.0, 0.0}) == 0.0);
  CHECK(partition_entropy({0.5, 0.25, 0.25}) == doctest::Approx(1.5 * std::log(2.0)));
  CHECK_THROWS_AS(partition_entropy({1.2, -0.2}), ValidationError);
  CHECK_THROWS_AS(partition_entropy({0.5, 0.4}), ValidationError);
  SplitMix rng(6);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> p(2 + t % 7);
    double s = 0.0;
    for (double& x : p) s += (x = rng.uniform());
    for (double& x : p) x /= s;
    const double h = partition_entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(p.size())) + 1e-12);
  }
}

TEST_CASE("conditional entropy") {
  // H(U|U) = 0: the joint table is diagonal.
  CHECK(conditional_entropy({{0.3, 0.0}, {0.0, 0.7}}) == doctest::Approx(0.0).epsilon(1e-15));
  SplitMix rng(9);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::vector<double>> j(3, std::vector<double>(4));
    double s = 0.0;
    for (auto& row : j)
      for (double& x : row) s += (x = rng.uniform());
    std::vector<double> pu(3, 0.0);
    for (std::size_t u = 0; u < 3; ++u)
      for (double& x : j[u]) pu[u] += (x /= s);
    CHECK(conditional_entropy(j) <= partition_entropy(pu) + 1e-12);
    CHECK(conditional_entropy(j) >= -1e-12);
  }
}

TEST_CASE("block entropy of synthetic label streams") {
  const std::vector<int> l_list{1, 2}, n_list{1, 2, 3};
  const int l_max = 2, n_max = 3;
  auto tensor = [&](std::function<std::uint64_t(std::size_t, int, int)> f) {
    SymbolTensor t;
    t.samples = 40000;
    t.n = n_max;
    t.positions = l_max;
    for (std::size_t s = 0; s < t.samples; ++s)
      for (int k = 0; k < n_max; ++k)
        for (int x = 0; x < l_max; ++x) t.labels.push_back(f(s, k, x));
    return t;
  };
  SplitMix rng(31);
  const auto iid = tensor([&](std::size_t, int, int) { return rng.next() & 1U; });
  const auto r1 = estimate_h_mu_from_labels({{iid}}, {0.1}, l_list, n_list, 1.0, l_max);
  CHECK(r1.h_mu.value == doctest::Approx(std::log(2.0)).epsilon(0.05));
  CHECK_FALSE(r1.flags.undersampled);

  const auto frozen = tensor([&](std::size_t s, int, int x) { return (s * 7 + x * 3) % 5; });
  const auto r2 = estimate_h_mu_from_labels({{frozen}}, {0.1}, l_list, n_list, 1.0, l_max);
  CHECK(r2.h_mu.value == doctest::Approx(0.0).epsilon(1e-12));
  for (const auto& e : r2.slices.front().rate) CHECK(std::abs(e.raw) < 1e-9);

  const auto single = tensor([](std::size_t, int, int) { return 4; });
  CHECK(block_entropy(single, 3, 0, 2) == 0.0);
  CHECK(estimate_h_mu_from_labels({{single}}, {0.1}, l_list, n_list, 1.0, l_max).h_mu.value == 0.0);

  SymbolTensor few = tensor([&](std::size_t, int, int) { return rng.next() & 7U; });
  bool once = false;
  block_entropy(few, 3, 0, 2, &once);
  CHECK(once);
}

TEST_CASE("Bowen distance") {
  const Grid g{1, 64.0, 128};
  const Spectral sp(g);
  const auto r = sample_realization(forcing(), 3, 0.02);
  const Field u = random_band_limited(g, 1, 1.0, 1.0, sp);
  const Field v = random_band_limited(g, 2, 1.0, 1.0, sp);
  const Window w{16.0, {0.0, 0.0}};
  CHECK(bowen_distance(u, v, BowenSpec{1, 1.0, w, 0.1}, r, params(), solver()) == sup_norm(u - v, w));
  CHECK(bowen_distance(u, u, BowenSpec{3, 1.0, w, 0.1}, r, params(), solver()) == 0.0);

  // n = 2 is the larger of the time-0 and time-tau window distances.
  SolverConfig c1 = solver();
  c1.t_end = 1.0;
  const Field u1 = evolve(u, r, params(), c1).final_state;
  const Field v1 = evolve(v, r, params(), c1).final_state;
  const double expect = std::max(sup_norm(u - v, w), sup_norm(u1 - v1, w));
  CHECK(bowen_distance(u, v, BowenSpec{2, 1.0, w, 0.1}, r, params(), solver()) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(bowen_distance(u, v, BowenSpec{1, 0.03, w, 0.1}, r, params(), solver()), AlignmentError);
}

TEST_CASE("Bowen clouds reproduce the Bowen distance") {
  const auto orbits = small_orbits(4, 5, 2);
  const Window w{8.0, {0.0, 0.0}};
  const auto pc = bowen_cloud(orbits, w, 3);
  const auto r = sample_realization(forcing(), 5, 0.02).shifted(4.0);
  const double direct =
      bowen_distance(orbits.orbits[0][0], orbits.orbits[1][0], BowenSpec{3, 1.0, w, 0.1}, r, params(), solver());
  CHECK(sup_distance(pc.row(0), pc.row(1), pc.dim) == doctest::Approx(direct).epsilon(1e-12));
  CHECK_THROWS_AS(bowen_cloud(orbits, w, 4), ValidationError);
}

TEST_CASE("subadditivity of exact covers") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto orbits = small_orbits(10, seed, 3);
    const Window q{4.0, {-6.0, 0.0}}, q2{4.0, {6.0, 0.0}};
    for (double eps : {0.05, 0.2, 0.5}) {
      // Non-increase in eps.
      CHECK(cover_count(bowen_cloud(orbits, q, 2), eps, CoverMethod::exact).count >=
            cover_count(bowen_cloud(orbits, q, 2), 2 * eps, CoverMethod::exact).count);
      // Space: N over Q and Q' jointly <= N(Q) N(Q').
      const auto a = bowen_cloud(orbits, q, 2), b = bowen_cloud(orbits, q2, 2);
      CHECK(cover_count(concat(a, b), eps, CoverMethod::exact).count <=
            cover_count(a, eps, CoverMethod::exact).count * cover_count(b, eps, CoverMethod::exact).count);
      // Time: depth 4 <= depth 2 times depth 2 started two steps later.
      OrbitEnsemble later = orbits;
      for (auto& o : later.orbits) o.erase(o.begin(), o.begin() + 2);
      later.n_max = 1;
      CHECK(cover_count(bowen_cloud(orbits, q, 4), eps, CoverMethod::exact).count <=
            cover_count(bowen_cloud(orbits, q, 2), eps, CoverMethod::exact).count *
                cover_count(bowen_cloud(later, q, 2), eps, CoverMethod::exact).count);
    }
  }
}

TEST_CASE("h_top of identical fields is zero; log N grows as eps shrinks") {
  const auto orbits = small_orbits(12, 7, 3);
  OrbitEnsemble same = orbits;
  for (auto& o : same.orbits) o = orbits.orbits[0];
  const auto z = estimate_h_top({same}, {0.1, 0.05}, {4, 8}, {2, 4}, CoverMethod::greedy);
  CHECK(z.h_top.value == 0.0);
  for (const auto& c : z.cells) CHECK(c.log_n == 0.0);

  const auto h = estimate_h_top({orbits}, {0.2, 0.1, 0.05}, {4, 8}, {2, 4}, CoverMethod::exact);
  CHECK(h.flags.monotone_in_eps);
  CHECK(h.h_top.value >= 0.0);
}

TEST_CASE("eps entropy") {
  const Grid g{1, 64.0, 128};
  EnsembleSnapshot one;
  one.fields.push_back(Field::constant(g, 0.3));
  const auto r = estimate_eps_entropy({one}, {0.1, 0.05, 0.02}, {4, 8}, CoverMethod::greedy);
  for (const auto& row : r.log_m_mean)
    for (double v : row) CHECK(v == 0.0);
  for (const auto& e : r.h_eps) CHECK(e.value == 0.0);
  CHECK(r.d_up.value == 0.0);

  const auto orbits = small_orbits(12, 8, 0);
  EnsembleSnapshot snap;
  for (const auto& o : orbits.orbits) snap.fields.push_back(o[0]);
  const auto s = estimate_eps_entropy({snap}, {0.4, 0.2, 0.1, 0.05}, {4, 8, 16}, CoverMethod::exact);
  CHECK(s.flags.monotone_in_eps);
  for (std::size_t l = 0; l < s.L.size(); ++l)
    for (std::size_t e = 1; e < s.eps.size(); ++e) CHECK(s.log_m_mean[e][l] >= s.log_m_mean[e - 1][l]);
}

TEST_CASE("divergence fits") {
  const double eps = 1e-6;
  std::vector<DivergenceSeries> series;
  for (int p = 0; p < 4; ++p) {
    DivergenceSeries s;
    s.eps = eps;
    for (int k = 0; k <= 50; ++k) {
      const double t = 0.1 * k;
      s.times.push_back(t);
      s.window_side.push_back(10.0);
      s.sup_diff.push_back((1.0 + 0.2 * p) * eps * std::exp(0.8 * t));
    }
    series.push_back(s);
  }
  DivergenceSeries zero = series.front();
  std::fill(zero.sup_diff.begin(), zero.sup_diff.end(), 0.0);
  series.push_back(zero);
  DivergenceSeries saturated = series.front();
  std::fill(saturated.sup_diff.begin(), saturated.sup_diff.end(), 1.0);
  series.push_back(saturated);

  const auto fit = fit_divergence(series, eps);
  CHECK(fit.used == 4);
  CHECK(fit.excluded == std::vector<std::size_t>{4, 5});
  CHECK(fit.gamma_hat == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(fit.c_hat == doctest::Approx(1.6).epsilon(1e-9));
  CHECK(envelope_violation(series, fit, eps) <= 1e-12);

  DivergenceSeries decay = series.front();
  for (std::size_t k = 0; k < decay.times.size(); ++k) decay.sup_diff[k] = eps * std::exp(-decay.times[k]);
  const auto f2 = fit_divergence({decay}, eps);
  CHECK(f2.gamma_raw == doctest::Approx(-1.0));
  CHECK(f2.gamma_hat == 0.0);
}

TEST_CASE("linearized dynamics diverge at rate 1") {
  const Grid g{1, 64.0, 128};
  const Spectral sp(g);
  SolverConfig c = solver(0.01);
  c.t_end = 5.0;
  c.record_stride = 10;
  c.nonlinearity_scale = 0.0;
  ForcingProfile none;
  none.modes.push_back({{0.0, 0.0}, 0.0, 0.0});
  const auto r = sample_realization(none, 1, 0.01);
  const double eps = 1e-6;
  std::vector<DivergenceSeries> out;
  for (int p = 0; p < 3; ++p) {
    const Field u0 = random_band_limited(g, 40 + p, 1.0, 1.0, sp);
    Field v0 = u0;
    const Field d = random_band_limited(g, 50 + p, 1.0, 0.5 * eps, sp);
    for (std::size_t i = 0; i < g.size(); ++i) v0[i] += d[i] + 0.5 * eps;
    out.push_back(pair_evolve(u0, v0, r, params(), c, PairWindow{32.0, 0.0, eps, {0.0, 0.0}}).divergence);
  }
  const auto fit = fit_divergence(out, eps);
  CHECK(fit.gamma_hat == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("divergence rate is insensitive to the initial separation") {
  const Grid g{1, 64.0, 128};
  const Spectral sp(g);
  SolverConfig c = solver(0.01);
  c.t_end = 6.0;
  c.record_stride = 10;
  const auto r = sample_realization(forcing(), 4, 0.01);
  auto fit_at = [&](double eps) {
    std::vector<DivergenceSeries> out;
    for (int p = 0; p < 3; ++p) {
      const Field u0 = random_band_limited(g, 60 + p, 1.0, 1.0, sp);
      Field v0 = u0;
      const Field d = random_band_limited(g, 70 + p, 1.5, eps, sp);
      for (std::size_t i = 0; i < g.size(); ++i) v0[i] += d[i];
      out.push_back(pair_evolve(u0, v0, r, params(), c, PairWindow{32.0, 0.0, eps, {0.0, 0.0}}).divergence);
    }
    return fit_divergence(out, eps);
  };
  const auto a = fit_at(1e-6), b = fit_at(1e-7);
  CHECK(std::abs(a.gamma_raw - b.gamma_raw) <= std::max(a.residual, b.residual));
}
