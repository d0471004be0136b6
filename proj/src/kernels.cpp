#include "sgl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "sgl/errors.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

namespace {

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
};

GaussRule gauss_legendre(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

const GaussRule& rule(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

double psi(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

double part_weight(KernelPart part, double p, double p_star) {
  switch (part) {
    case KernelPart::minus: return chi(p / p_star);
    case KernelPart::plus: return 1.0 - chi(p / p_star);
    case KernelPart::full: return 1.0;
  }
  return 1.0;
}

struct Panels {
  cplx value;
  double l1;
};

// Nodes and symbol-times-weight values of one composite rule. These do not
// depend on x, so they are shared by every x evaluated at the same t.
struct NodeSet {
  std::vector<double> p;
  std::vector<cplx> ws;
  double l1 = 0.0;
};

const NodeSet& node_set(KernelPart part, double t, const KernelConfig& c, double a, double b, int panels) {
  using Key = std::tuple<int, double, double, double, double, double, int, int>;
  thread_local std::map<Key, NodeSet> cache;
  const Key key{static_cast<int>(part), t, c.alpha, c.p_star, a, b, panels, c.quadrature_points};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (cache.size() > 256) cache.clear();
  const GaussRule& g = rule(c.quadrature_points);
  // The ramp is flat to all orders at p* and 2p*; grade the mesh geometrically
  // towards those points so the rule converges quickly there.
  std::vector<double> cuts{a, b};
  for (double bp : {c.p_star, 2.0 * c.p_star})
    if (bp > a && bp < b) cuts.push_back(bp);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> edges;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1], mid = 0.5 * (lo + hi);
    const bool flat_lo = lo == c.p_star || lo == 2.0 * c.p_star;
    const bool flat_hi = hi == c.p_star || hi == 2.0 * c.p_star;
    std::vector<double> e{lo};
    if (flat_lo)
      for (int j = 24; j >= 1; --j) e.push_back(lo + (mid - lo) * std::ldexp(1.0, -j));
    e.push_back(mid);
    if (flat_hi)
      for (int j = 1; j <= 24; ++j) e.push_back(hi - (hi - mid) * std::ldexp(1.0, -j));
    e.push_back(hi);
    if (edges.empty()) edges.push_back(lo);
    edges.insert(edges.end(), e.begin() + 1, e.end());
  }
  NodeSet ns;
  const double scale = 0.5 / std::numbers::pi;
  for (std::size_t m = 0; m + 1 < edges.size(); ++m) {
    const double lo = edges[m], hi = edges[m + 1];
    const int np = std::max(1, static_cast<int>(std::ceil(panels * (hi - lo) / (b - a))));
    const double h = (hi - lo) / np;
    for (int k = 0; k < np; ++k) {
      const double mid = lo + (k + 0.5) * h;
      for (std::size_t j = 0; j < g.x.size(); ++j) {
        const double p = mid + 0.5 * h * g.x[j];
        const double w = part_weight(part, p, c.p_star);
        if (w == 0.0) continue;
        const cplx s = std::exp(cplx(t * (1.0 - p * p), -t * c.alpha * p * p)) * w * (g.w[j] * h * scale);
        ns.p.push_back(p);
        ns.ws.push_back(s);
        ns.l1 += std::abs(s);
      }
    }
  }
  return cache.emplace(key, std::move(ns)).first->second;
}

Panels integrate(KernelPart part, double t, double x, const KernelConfig& c, double a, double b, int panels) {
  const NodeSet& ns = node_set(part, t, c, a, b, panels);
  cplx acc = 0.0;
  for (std::size_t i = 0; i < ns.p.size(); ++i) acc += std::cos(ns.p[i] * x) * ns.ws[i];
  return {acc, ns.l1};
}

double kernel_sup_refined(const std::vector<double>& xs, const std::function<double(double)>& g, double* arg) {
  std::size_t best = 0;
  double best_val = -1.0;
  std::vector<double> vals(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    vals[i] = g(xs[i]);
    if (vals[i] > best_val) {
      best_val = vals[i];
      best = i;
    }
  }
  double a = xs[best > 0 ? best - 1 : 0];
  double b = xs[std::min(best + 1, xs.size() - 1)];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = g(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  const double vm = g(xm);
  if (arg) *arg = vm > best_val ? xm : xs[best];
  return std::max(vm, best_val);
}

}  // namespace

void KernelConfig::validate() const {
  if (!(p_star > 4.0)) throw ValidationError("p_star_out_of_range", "split frequency p* must exceed 4");
  if (quadrature_points < 2 || quadrature_points > 64)
    throw ValidationError("quadrature_invalid", "quadrature_points must be in [2, 64]");
  if (!(rel_tol > 0.0)) throw ValidationError("quadrature_invalid", "rel_tol must be positive");
  if (!(x_max > 0.0 && x_step > 0.0)) throw ValidationError("grid_invalid", "x_max and x_step must be positive");
}

double chi(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double a = psi(2.0 - s);
  const double b = psi(s - 1.0);
  return a / (a + b);
}

std::string to_string(KernelPart p) {
  switch (p) {
    case KernelPart::minus: return "minus";
    case KernelPart::plus: return "plus";
    case KernelPart::full: return "full";
  }
  return "unknown";
}

cplx kernel_quadrature(KernelPart part, double t, double x, const KernelConfig& config) {
  if (!(t > 0.0)) throw ValidationError("t_invalid", "kernel time must be positive");
  const double ps = config.p_star;
  const double p_hi = std::sqrt(4.0 * ps * ps + 80.0 / t);
  double a = 0.0, b = p_hi;
  if (part == KernelPart::minus) b = 2.0 * ps;
  if (part == KernelPart::plus) a = ps;
  const double want = (b - a) * (1.0 + std::abs(x)) / 4.0;
  int panels = 8;
  while (panels < want) panels *= 2;
  Panels prev = integrate(part, t, x, config, a, b, panels);
  for (int it = 0; it < 12; ++it) {
    panels *= 2;
    const Panels cur = integrate(part, t, x, config, a, b, panels);
    const double diff = std::abs(cur.value - prev.value);
    if (diff <= config.rel_tol * std::abs(cur.value) + 1e-12 * cur.l1) return cur.value;
    prev = cur;
  }
  return prev.value;
}

cplx kernel_minus(double t, double x, const KernelConfig& config) {
  return kernel_quadrature(KernelPart::minus, t, x, config);
}

cplx kernel_plus(double t, double x, const KernelConfig& config) {
  return kernel_quadrature(KernelPart::plus, t, x, config);
}

cplx kernel_full(double t, double x, double alpha) {
  const cplx a = t * cplx(1.0, alpha);
  return std::exp(t) / std::sqrt(4.0 * std::numbers::pi * a) * std::exp(-x * x / (4.0 * a));
}

KernelDecayFit verify_kernel_decay(const KernelConfig& config, int n, const std::vector<double>& t_list,
                                   KernelPart part) {
  config.validate();
  if (n < 1 || n > 3) throw ValidationError("order_invalid", "decay order n must be 1, 2 or 3");
  if (part == KernelPart::full) throw ValidationError("part_invalid", "decay fits apply to the split kernels");
  if (t_list.empty()) throw ValidationError("t_list_empty", "need at least one time");
  for (double t : t_list)
    if (!(t >= 0.5)) throw ValidationError("t_out_of_range", "decay fits require t >= 0.5");

  const double ps2 = config.p_star * config.p_star;
  KernelDecayFit fit;
  fit.n = n;
  fit.part = part;
  auto scaled = [&](double t, double x) {
    double v = std::abs(kernel_quadrature(part, t, x, config)) * std::sqrt(t) * std::pow(1.0 + x * x / t, n);
    if (part == KernelPart::plus) v *= std::exp(0.5 * ps2 * t);
    return v;
  };
  std::vector<double> xs;
  for (double x = 0.0; x <= config.x_max + 1e-12; x += config.x_step) xs.push_back(x);
  double c = 0.0;
  for (double t : t_list) {
    c = std::max(c, kernel_sup_refined(xs, [&](double x) { return scaled(t, x); }, nullptr));
    fit.fit_points += xs.size();
  }
  fit.c_n = c;
  double worst = -1.0;
  for (double t : t_list) {
    for (double x = config.x_step / 3.0; x <= 2.0 * config.x_max; x += config.x_step) {
      worst = std::max(worst, scaled(t, x) / c - 1.0);
      ++fit.verify_points;
    }
  }
  if (!std::isfinite(c) || c <= 0.0)
    throw Error(ErrorKind::runtime, "fit_failure", "kernel decay fit produced a non-positive constant");
  fit.max_violation = worst;
  return fit;
}

EnvelopeFit fit_plus_envelope(const KernelConfig& config, const std::vector<double>& t_fit,
                              const std::vector<double>& t_verify) {
  config.validate();
  const double ps2 = config.p_star * config.p_star;
  std::vector<double> xs;
  for (double x = 0.0; x <= config.x_max + 1e-12; x += config.x_step) xs.push_back(x);
  auto value = [&](double t) {
    const double s = kernel_sup_refined(
        xs, [&](double x) { return std::abs(kernel_plus(t, x, config)); }, nullptr);
    return s * std::sqrt(t) * std::exp(0.5 * ps2 * t);
  };
  EnvelopeFit out;
  for (double t : t_fit) out.constant = std::max(out.constant, value(t));
  out.max_violation = -1.0;
  for (double t : t_verify) {
    const double v = value(t);
    out.t_verify.push_back(t);
    out.sup_values.push_back(v * std::exp(-0.5 * ps2 * t) / std::sqrt(t));
    out.max_violation = std::max(out.max_violation, v / out.constant - 1.0);
  }
  return out;
}

double CartwrightGrid::node(int n) const { return n * std::numbers::pi / (8.0 * p_star); }

double CartwrightGrid::half_span() const { return node(n_max); }

cplx cartwright_interpolate(std::span<const cplx> samples, const CartwrightGrid& grid, double x) {
  if (samples.size() != static_cast<std::size_t>(2 * grid.n_max + 1))
    throw ValidationError("sample_count", "expected 2 n_max + 1 samples");
  if (!(std::abs(x) < grid.half_span() - grid.safe_margin())) {
    std::ostringstream os;
    os << "x = " << x << " lies outside the safe interior |x| < " << grid.half_span() - grid.safe_margin();
    throw ValidationError("truncation_domain", os.str());
  }
  const double ps = grid.p_star;
  const double step = std::numbers::pi / (8.0 * ps);
  const int m = static_cast<int>(std::lround(x / step));
  const double r = x - m * step;  // offset from the nearest node
  if (std::abs(r) <= 1e-14 * step) return samples[static_cast<std::size_t>(m + grid.n_max)];
  // sin(8 p* x) = (-1)^m sin(8 p* r); sin(4 p* (x - x_n)) = sin(4 p* r - (n - m) pi/2).
  const double s8 = ((m & 1) ? -1.0 : 1.0) * std::sin(8.0 * ps * r);
  const double a = 4.0 * ps * r;
  const double cyc[4] = {std::sin(a), -std::cos(a), -std::sin(a), std::cos(a)};
  cplx acc = 0.0;
  for (int n = -grid.n_max; n <= grid.n_max; ++n) {
    const double dx = x - n * step;
    const int k = ((n - m) % 4 + 4) % 4;
    const double sign = (n & 1) ? -1.0 : 1.0;
    acc += samples[static_cast<std::size_t>(n + grid.n_max)] * (sign * cyc[k] / (dx * dx));
  }
  return acc * (s8 / (32.0 * ps * ps));
}

RefinedCover cover_refine_step(const std::vector<Field>& representatives, const NoiseRealization& realization,
                               const ModelParams& params, const SolverConfig& config, const Window& window,
                               double eps, double p_star) {
  if (!(eps > 0.0)) throw ValidationError("eps_invalid", "eps must be positive");
  RefinedCover out;
  out.input_count = representatives.size();
  if (representatives.empty()) return out;
  const Grid& g = representatives.front().grid;
  if (g.d != 1) throw ValidationError("dimension_unsupported", "cover refinement is one-dimensional");
  window.validate_in(g);
  SolverConfig cfg = config;
  cfg.t_end = 1.0;
  cfg.record_norms = false;
  cfg.observables.clear();
  cfg.validate();
  const CartwrightGrid cg{p_star, 0};
  std::vector<double> nodes;
  const int span = static_cast<int>(std::ceil((std::abs(window.center[0]) + window.side) / cg.node(1)));
  for (int n = -span; n <= span; ++n)
    if (window.contains({cg.node(n), 0.0}, 1)) nodes.push_back(cg.node(n));
  out.nodes = nodes.size();

  const Spectral sp(g);
  const double box = 0.5 * eps;
  std::map<std::vector<std::int64_t>, std::size_t> seen;
  Stepper stepper(g, params, cfg, realization);
  for (std::size_t r = 0; r < representatives.size(); ++r) {
    stepper.reset(representatives[r]);
    for (std::int64_t k = 0; k < cfg.steps(); ++k) stepper.advance();
    std::vector<cplx> hat = stepper.state().values;
    sp.forward(hat);
    std::vector<std::int64_t> cell;
    cell.reserve(2 * nodes.size());
    for (double x : nodes) {
      const cplx v = fourier_interpolate(hat, g, x);
      cell.push_back(static_cast<std::int64_t>(std::floor(v.real() / box)));
      cell.push_back(static_cast<std::int64_t>(std::floor(v.imag() / box)));
    }
    if (seen.emplace(cell, out.cells.size()).second) {
      out.cells.push_back(std::move(cell));
      out.source.push_back(r);
      out.representatives.push_back(stepper.state());
    }
  }
  return out;
}

}  // namespace sgl
