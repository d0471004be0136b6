#include <doctest.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "sgl/checkpoint.hpp"
#include "sgl/errors.hpp"
#include "sgl/norms.hpp"
#include "sgl/rng.hpp"
#include "sgl/spectral.hpp"

using namespace sgl;

namespace {

Grid grid1(double box = 100.0, int n = 512) { return Grid{1, box, n}; }

double gsl_weight_integral(double delta, double half) {
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(1000);
  gsl_function f;
  f.function = [](double x, void* p) {
    const double d = *static_cast<double*>(p);
    return std::exp(-std::sqrt(1.0 + d * d * x * x));
  };
  f.params = &delta;
  double result = 0.0, err = 0.0;
  gsl_integration_qag(&f, -half, half, 1e-14, 1e-12, 1000, GSL_INTEG_GAUSS61, w, &result, &err);
  gsl_integration_workspace_free(w);
  return result;
}

Field plane_wave(const Grid& g, double p1, double p2 = 0.0) {
  Field f = Field::zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.point(i);
    f[i] = std::polar(1.0, p1 * x[0] + (g.d == 2 ? p2 * x[1] : 0.0));
  }
  return f;
}

}  // namespace

TEST_CASE("grid geometry") {
  const Grid g = grid1(100.0, 512);
  CHECK_NOTHROW(g.validate());
  CHECK(g.coord(0) == -50.0);
  CHECK(g.spacing() == doctest::Approx(100.0 / 512));
  CHECK(g.index_of(0.0) == 256);
  CHECK(g.index_of(g.coord(17)) == 17);
  CHECK_THROWS_AS((Grid{1, 100.0, 100}).validate(), ValidationError);
  CHECK_THROWS_AS((Grid{3, 100.0, 64}).validate(), ValidationError);
  const Grid g2{2, 10.0, 8};
  CHECK(g2.size() == 64);
  const Point p = g2.point(8 * 3 + 5);
  CHECK(p[0] == doctest::Approx(g2.coord(3)));
  CHECK(p[1] == doctest::Approx(g2.coord(5)));
}

TEST_CASE("window membership and margins") {
  const Grid g = grid1(100.0, 512);
  const Window w{10.0, {0.0, 0.0}};
  CHECK(w.contains({-5.0, 0.0}, 1));
  CHECK_FALSE(w.contains({5.0, 0.0}, 1));
  const auto idx = w.indices(g);
  CHECK(idx.size() == static_cast<std::size_t>(std::round(10.0 / g.spacing())));
  CHECK_NOTHROW((Window{50.0, {0.0, 0.0}}).validate_in(g));
  CHECK_THROWS_AS((Window{50.0, {1.0, 0.0}}).validate_in(g), ValidationError);
  CHECK_THROWS_AS((Window{0.0, {0.0, 0.0}}).validate_in(g), ValidationError);
}

TEST_CASE("weight examples") {
  WeightSpec s{0.3, {2.0, 0.0}};
  CHECK(weight_at(s, {2.0, 0.0}) == doctest::Approx(std::exp(-1.0)));
  WeightSpec flat{0.0, {0.0, 0.0}};
  for (double x : {-40.0, 0.0, 13.0}) CHECK(weight_at(flat, {x, 0.0}) == doctest::Approx(std::exp(-1.0)));
  WeightSpec one{1.0, {0.0, 0.0}};
  CHECK(weight_at(one, {1.0, 0.0}) == doctest::Approx(std::exp(-std::sqrt(2.0))));
  CHECK(weight_at(one, {500.0, 0.0}) > 0.0);
}

TEST_CASE("weight derivative ratios") {
  for (double delta : {0.1, 0.5, 1.0}) {
    const auto r1 = weight_derivative_ratio({delta, {0, 0}}, 1);
    CHECK(r1.bound == doctest::Approx(delta));
    CHECK(r1.ratio_sup <= r1.bound * (1 + 1e-9));
    CHECK(r1.ratio_sup == doctest::Approx(delta).epsilon(1e-5));
  }
  CHECK(weight_derivative_ratio({0.0, {0, 0}}, 1).ratio_sup == 0.0);
  CHECK(weight_derivative_ratio({0.0, {0, 0}}, 2).ratio_sup == 0.0);

  // |phi''/phi| = delta^2 |g'^2 - g''| with g = sqrt(1 + u^2), u = delta r.
  const double delta = 0.5;
  double oracle = 0.0;
  for (int i = 0; i <= 400000; ++i) {
    const double u = i * 1e-4;
    const double gp = u / std::sqrt(1 + u * u);
    const double gpp = std::pow(1 + u * u, -1.5);
    oracle = std::max(oracle, delta * delta * std::abs(gp * gp - gpp));
  }
  const auto r2 = weight_derivative_ratio({delta, {0, 0}}, 2);
  CHECK(r2.ratio_sup == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(r2.ratio_sup <= r2.bound * (1 + 1e-6));
  const auto r2d = weight_derivative_ratio({delta, {0, 0}}, 2, 2);
  CHECK(r2d.ratio_sup <= r2d.bound * (1 + 1e-6));
  CHECK_THROWS_AS(weight_derivative_ratio({delta, {0, 0}}, 3), ValidationError);
}

TEST_CASE("local L2 norm") {
  const Grid g = grid1(100.0, 1024);
  CHECK(local_l2_norm(Field::zeros(g), {1.0, {0, 0}}) == 0.0);
  const Field one = Field::constant(g, 1.0);
  const double oracle = std::sqrt(gsl_weight_integral(1.0, 50.0));
  CHECK(local_l2_norm(one, {1.0, {0, 0}}) == doctest::Approx(oracle).epsilon(1e-10));
  // The periodized weight reaches the infinite-line value for small delta too.
  const double oracle2 = std::sqrt(gsl_weight_integral(0.2, 2000.0));
  CHECK(local_l2_norm(one, {0.2, {0, 0}}) == doctest::Approx(oracle2).epsilon(1e-9));

  const Spectral sp(g);
  const Field f = random_band_limited(g, 5, 2.0, 1.5, sp);
  CHECK(local_l2_norm(2.0 * f, {0.2, {3.0, 0}}) == doctest::Approx(2.0 * local_l2_norm(f, {0.2, {3.0, 0}})));
}

TEST_CASE("Hm local norms") {
  const Grid g = grid1(100.0, 512);
  const double p = 2 * std::numbers::pi * 7 / 100.0;
  const Field f = plane_wave(g, p);
  const WeightSpec s{0.2, {1.0, 0}};
  const double n0 = hm_local_norm(f, s, 0);
  CHECK(n0 == doctest::Approx(local_l2_norm(f, s)));
  CHECK(hm_local_norm(f, s, 1) * hm_local_norm(f, s, 1) == doctest::Approx((1 + p * p) * n0 * n0).epsilon(1e-10));
  CHECK(hm_local_norm(f, s, 2) * hm_local_norm(f, s, 2) ==
        doctest::Approx((1 + p * p + p * p * p * p) * n0 * n0).epsilon(1e-10));
  for (int m = 0; m <= 2; ++m) CHECK(hm_local_norm(Field::zeros(g), s, m) == 0.0);

  const Grid g2{2, 40.0, 64};
  const double p1 = 2 * std::numbers::pi * 3 / 40.0, p2 = 2 * std::numbers::pi * 2 / 40.0;
  const Field f2 = plane_wave(g2, p1, p2);
  const double k2 = p1 * p1 + p2 * p2;
  const double m0 = hm_local_norm(f2, s, 0);
  CHECK(hm_local_norm(f2, s, 2) * hm_local_norm(f2, s, 2) == doctest::Approx((1 + k2 + k2 * k2) * m0 * m0).epsilon(1e-9));
}

TEST_CASE("derivative density of plane waves") {
  const Grid g{2, 20.0, 32};
  const Spectral sp(g);
  const double p1 = 2 * std::numbers::pi * 2 / 20.0, p2 = -2 * std::numbers::pi * 3 / 20.0;
  const Field f = plane_wave(g, p1, p2);
  const auto d1 = derivative_density(f, 1, sp);
  const auto d2 = derivative_density(f, 2, sp);
  const double k2 = p1 * p1 + p2 * p2;
  for (std::size_t i = 0; i < g.size(); i += 37) {
    CHECK(d1[i] == doctest::Approx(k2).epsilon(1e-10));
    CHECK(d2[i] == doctest::Approx(k2 * k2).epsilon(1e-10));
  }
}

TEST_CASE("uniformly local norm") {
  const Grid g = grid1(64.0, 512);
  const Field c = Field::constant(g, cplx(0.0, 2.0));
  const auto u = hm_ul_norm(c, 0.2, 0);
  CHECK(u.value == doctest::Approx(local_l2_norm(c, {0.2, {7.3, 0}})).epsilon(1e-10));
  CHECK(hm_ul_norm(Field::zeros(g), 0.2, 2).value == 0.0);

  // Bump centred on a lattice point: the sup over a dense scan of centres is attained there.
  Field bump = Field::zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.point(i)[0] - 5.0;
    bump[i] = std::abs(x) < 3.0 ? std::exp(-1.0 / (1.0 - x * x / 9.0)) : 0.0;
  }
  double dense = 0.0;
  for (double y = -32.0; y < 32.0; y += 0.05) dense = std::max(dense, local_l2_norm(bump, {1.0, {y, 0}}));
  const auto ub = hm_ul_norm(bump, 1.0, 0);
  CHECK(ub.value == doctest::Approx(dense).epsilon(1e-6));
  CHECK(ub.argmax.at(0)[0] == doctest::Approx(5.0));
}

TEST_CASE("inclusion and monotonicity in m") {
  const Grid g = grid1(64.0, 256);
  const Spectral sp(g);
  const NormEvaluator ev(g, 0.3);
  for (int s = 0; s < 5; ++s) {
    const Field f = random_band_limited(g, 100 + s, 3.0, 1.0, sp);
    for (int m = 0; m <= 2; ++m) {
      const double ul = ev.ul(f, m).value;
      for (const Point& y : ev.centers()) CHECK(hm_local_norm(f, {0.3, y}, m) <= ul * (1 + 1e-12));
      if (m < 2) {
        const WeightSpec w{0.3, {1.5, 0}};
        CHECK(hm_local_norm(f, w, m + 1) >= hm_local_norm(f, w, m));
      }
    }
  }
}

TEST_CASE("Sobolev embedding constant holds out of sample") {
  const Grid g = grid1(64.0, 256);
  const Spectral sp(g);
  const double delta = 0.2;
  const NormEvaluator ev(g, delta);
  std::vector<double> ratios;
  for (int s = 0; s < 100; ++s) {
    const Field f = random_band_limited(g, 1000 + s, 1.0 + 0.05 * s, 1.0, sp);
    const double ul = ev.ul(f, 1).value;
    ratios.push_back(sup_norm(f) * sup_norm(f) / (delta * ul * ul));
  }
  const double c = *std::max_element(ratios.begin(), ratios.begin() + 50);
  int violations = 0;
  for (std::size_t i = 50; i < ratios.size(); ++i) violations += ratios[i] > c * 1.5;
  CHECK(violations == 0);
  CHECK(std::isfinite(c));
}

TEST_CASE("sup norm") {
  const Grid g = grid1(100.0, 256);
  CHECK(sup_norm(Field::constant(g, cplx(3.0, 4.0))) == doctest::Approx(5.0));
  Field f = Field::zeros(g);
  f[g.index_of(1.0)] = 3.0;
  f[g.index_of(30.0)] = 7.0;
  const Window w{10.0, {0.0, 0.0}};
  CHECK(sup_norm(f, w) == 3.0);
  CHECK(sup_norm(f, w) <= sup_norm(f));
}

TEST_CASE("random band-limited fields") {
  const Grid g = grid1(100.0, 256);
  const Spectral sp(g);
  const Field a = random_band_limited(g, 1, 2.0, 2.5, sp);
  const Field b = random_band_limited(g, 1, 2.0, 2.5, sp);
  CHECK(sup_norm(a) == doctest::Approx(2.5));
  CHECK(a.values == b.values);
  std::vector<cplx> spec = a.values;
  sp.forward(spec);
  for (int i = 0; i < g.points_per_dim; ++i)
    if (std::abs(sp.wavenumber(i)) > 2.0) CHECK(std::abs(spec[i]) < 1e-9);
}

TEST_CASE("checkpoint layout and round trip") {
  const Grid g{2, 12.5, 8};
  Field f = Field::zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = cplx(0.1 * i, -1.0 / (i + 1));
  const std::string bytes = encode_field(f);
  CHECK(bytes.substr(0, 4) == "SGL1");
  CHECK(bytes.size() == 4 + 4 + 1 + 4 + 8 + 16 * g.size());
  const unsigned char* u = reinterpret_cast<const unsigned char*>(bytes.data());
  CHECK(u[4] == 1);
  CHECK(u[5] == 0);
  CHECK(u[8] == 2);
  CHECK(u[9] == 8);
  double box;
  std::memcpy(&box, bytes.data() + 13, 8);
  CHECK(box == 12.5);
  double im1;
  std::memcpy(&im1, bytes.data() + 21 + 16 + 8, 8);
  CHECK(im1 == -0.5);
  const Field back = decode_field(bytes);
  CHECK(back.grid == g);
  CHECK(back.values == f.values);

  CHECK_THROWS_AS(decode_field("XXXX"), IoError);
  CHECK_THROWS_AS(decode_field(bytes.substr(0, bytes.size() - 1)), IoError);
  std::string bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_field(bad), IoError);

  const auto path = std::filesystem::temp_directory_path() / "sgl_test_ckpt" / "f.sgl";
  write_checkpoint(path, f);
  CHECK(read_checkpoint(path).values == f.values);
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  CHECK_THROWS_AS(read_checkpoint(path.parent_path() / "missing.sgl"), IoError);
}
