#include "sgl/norms.hpp"

#include <algorithm>
#include <cmath>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

constexpr double kImageCutoff = 36.0;  // exp(-36) ~ 2e-16
constexpr std::size_t kMaxCachedWeights = 20'000'000;

void require_delta(double delta) {
  if (!(delta > 0.0)) throw ValidationError("delta_invalid", "weight decay rate delta must be positive");
}

// phi(u+s)/phi(u) in the scaled radial variable u = delta r.
double rel_phi(double u, double s) {
  return std::exp(std::sqrt(1.0 + u * u) - std::sqrt(1.0 + (u + s) * (u + s)));
}

}  // namespace

double weight_at(const WeightSpec& spec, const Point& x, int d) {
  double r2 = 0.0;
  for (int k = 0; k < d; ++k) r2 += (x[k] - spec.center[k]) * (x[k] - spec.center[k]);
  return std::exp(-std::sqrt(1.0 + spec.delta * spec.delta * r2));
}

WeightDerivativeReport weight_derivative_ratio(const WeightSpec& spec, int order, int d) {
  if (order != 1 && order != 2) throw ValidationError("order_invalid", "weight derivative order must be 1 or 2");
  if (d != 1 && d != 2) throw ValidationError("dimension_unsupported", "dimension must be 1 or 2");
  WeightDerivativeReport rep;
  rep.order = order;
  rep.a_n = (order == 2 && d == 2) ? std::sqrt(2.0) : 1.0;
  rep.bound = rep.a_n * std::pow(std::abs(spec.delta), order);
  if (spec.delta == 0.0) return rep;

  std::vector<double> us;
  for (int i = 0; i <= 20000; ++i) us.push_back(i * 5e-4);
  for (int i = 1; i <= 2000; ++i) us.push_back(10.0 * std::pow(200.0, i / 2000.0));

  const double h = 1e-3;
  double sup = 0.0;
  for (double u : us) {
    const double fp2 = rel_phi(u, 2 * h), fp1 = rel_phi(u, h);
    const double fm1 = rel_phi(u, -h), fm2 = rel_phi(u, -2 * h);
    const double d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
    double r;
    if (order == 1) {
      r = std::abs(d1);
    } else {
      const double d2 = (-fp2 + 16.0 * fp1 - 30.0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
      if (d == 1) {
        r = std::abs(d2);
      } else {
        const double tangential = u > 0.0 ? d1 / u : d2;
        r = std::sqrt(d2 * d2 + tangential * tangential);
      }
    }
    sup = std::max(sup, r);
  }
  rep.ratio_sup = sup * std::pow(std::abs(spec.delta), order);
  return rep;
}

std::vector<double> periodized_weight(const WeightSpec& spec, const Grid& g) {
  require_delta(spec.delta);
  const double b = g.box_length;
  const int images = static_cast<int>(std::ceil(kImageCutoff / (spec.delta * b))) + 1;
  std::vector<double> w(g.size(), 0.0);
  const double d2 = spec.delta * spec.delta;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.point(i);
    double acc = 0.0;
    if (g.d == 1) {
      const double dx = x[0] - spec.center[0];
      for (int m = -images; m <= images; ++m) {
        const double s = dx + m * b;
        acc += std::exp(-std::sqrt(1.0 + d2 * s * s));
      }
    } else {
      const double dx = x[0] - spec.center[0];
      const double dy = x[1] - spec.center[1];
      for (int m = -images; m <= images; ++m) {
        const double sx = dx + m * b;
        if (spec.delta * (std::abs(sx)) > kImageCutoff + spec.delta * b) continue;
        for (int n = -images; n <= images; ++n) {
          const double sy = dy + n * b;
          acc += std::exp(-std::sqrt(1.0 + d2 * (sx * sx + sy * sy)));
        }
      }
    }
    w[i] = acc;
  }
  return w;
}

double weighted_integral(const std::vector<double>& w, const std::vector<double>& rho, const Grid& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * rho[i];
  const double h = g.spacing();
  return acc * (g.d == 1 ? h : h * h);
}

double local_l2_norm(const Field& f, const WeightSpec& spec) { return hm_local_norm(f, spec, 0); }

double hm_local_norm(const Field& f, const WeightSpec& spec, int m) {
  if (m < 0) throw ValidationError("order_invalid", "Sobolev order must be non-negative");
  const auto w = periodized_weight(spec, f.grid);
  double total = 0.0;
  if (m == 0) {
    total = weighted_integral(w, derivative_density(f, 0, Spectral(f.grid)), f.grid);
  } else {
    const Spectral sp(f.grid);
    for (int k = 0; k <= m; ++k) total += weighted_integral(w, derivative_density(f, k, sp), f.grid);
  }
  return std::sqrt(total);
}

UlNorm hm_ul_norm(const Field& f, double delta, int m, double lattice_spacing) {
  return NormEvaluator(f.grid, delta, lattice_spacing).ul(f, m);
}

double sup_norm(const Field& f) {
  double s = 0.0;
  for (const cplx& z : f.values) s = std::max(s, std::abs(z));
  return s;
}

double sup_norm(const Field& f, const Window& window) {
  if (!(window.side > 0.0)) throw ValidationError("window_invalid", "window side must be positive");
  for (int k = 0; k < f.grid.d; ++k)
    if (std::abs(window.center[k]) + 0.5 * window.side > 0.5 * f.grid.box_length + 1e-9)
      throw ValidationError("window_outside_box", "window extends beyond the box");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (window.contains(f.grid.point(i), f.grid.d)) s = std::max(s, std::abs(f[i]));
  return s;
}

NormEvaluator::NormEvaluator(const Grid& g, double delta, double lattice_spacing)
    : grid_(g), delta_(delta) {
  require_delta(delta);
  if (!(lattice_spacing > 0.0)) throw ValidationError("lattice_invalid", "lattice spacing must be positive");
  g.validate();
  const int per_dim = static_cast<int>(std::ceil(g.box_length / lattice_spacing - 1e-9));
  spacing_ = g.box_length / per_dim;
  for (int i = 0; i < per_dim; ++i) {
    const double a = -0.5 * g.box_length + i * spacing_;
    if (g.d == 1) {
      centers_.push_back({a, 0.0});
    } else {
      for (int j = 0; j < per_dim; ++j) centers_.push_back({a, -0.5 * g.box_length + j * spacing_});
    }
  }
  if (centers_.size() * g.size() <= kMaxCachedWeights) {
    weights_.reserve(centers_.size());
    for (const Point& c : centers_) weights_.push_back(periodized_weight({delta, c}, g));
  }
  spectral_ = std::make_unique<Spectral>(g);
}

const std::vector<double>& NormEvaluator::weight(std::size_t c, std::vector<double>& scratch) const {
  if (!weights_.empty()) return weights_[c];
  scratch = periodized_weight({delta_, centers_[c]}, grid_);
  return scratch;
}

std::vector<std::vector<double>> NormEvaluator::local_terms(const Field& f, int m) const {
  if (m < 0) throw ValidationError("order_invalid", "Sobolev order must be non-negative");
  std::vector<std::vector<double>> rho;
  for (int k = 0; k <= m; ++k) rho.push_back(derivative_density(f, k, *spectral_));
  std::vector<std::vector<double>> terms(m + 1, std::vector<double>(centers_.size()));
  std::vector<double> scratch;
  for (std::size_t c = 0; c < centers_.size(); ++c) {
    const auto& w = weight(c, scratch);
    for (int k = 0; k <= m; ++k) terms[k][c] = weighted_integral(w, rho[k], grid_);
  }
  return terms;
}

double NormEvaluator::local(const Field& f, const WeightSpec& spec, int m) const {
  const auto w = periodized_weight(spec, grid_);
  double total = 0.0;
  for (int k = 0; k <= m; ++k) total += weighted_integral(w, derivative_density(f, k, *spectral_), grid_);
  return std::sqrt(total);
}

UlNorm NormEvaluator::ul(const Field& f, int m) const {
  const auto terms = local_terms(f, m);
  UlNorm out;
  out.lattice_spacing = spacing_;
  out.centers = centers_.size();
  double total = 0.0;
  for (int k = 0; k <= m; ++k) {
    const auto it = std::max_element(terms[k].begin(), terms[k].end());
    total += *it;
    out.argmax.push_back(centers_[static_cast<std::size_t>(it - terms[k].begin())]);
  }
  out.value = std::sqrt(total);
  return out;
}

}  // namespace sgl
