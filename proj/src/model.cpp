#include "sgl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

constexpr double kBoundaryTol = 1e-12;

void validate_q_d(const ModelParams& p) {
  if (!(p.q > 0.5)) {
    std::ostringstream os;
    os << "nonlinearity exponent q must exceed 1/2, got " << p.q;
    throw ValidationError("q_out_of_range", os.str());
  }
  if (p.d != 1 && p.d != 2) {
    std::ostringstream os;
    os << "spatial dimension must be 1 or 2, got " << p.d;
    throw ValidationError("dimension_unsupported", os.str());
  }
}

double theta_of(double q) { return std::asin(q / (1.0 + q)); }

// Max over eta in [0, pi/2] of the bracket with lambda = cos^2 eta.
// Coarse scan then golden-section refinement around the best cell.
std::pair<double, double> maximize_bracket(const ModelParams& p, double eps) {
  constexpr int kScan = 256;
  const double hi = std::numbers::pi / 2.0;
  auto f = [&](double eta) {
    const double c = std::cos(eta);
    return dissipativity_bracket(p, c * c, eps);
  };
  int best = 0;
  double best_val = f(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double v = f(hi * i / kScan);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = hi * std::max(0, best - 1) / kScan;
  double b = hi * std::min(kScan, best + 1) / kScan;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > 1e-12) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  const double eta = 0.5 * (a + b);
  const double val = f(eta);
  if (val >= best_val) return {eta, val};
  return {hi * best / kScan, best_val};
}

}  // namespace

void ModelParams::validate() const {
  validate_q_d(*this);
  if (!(big_r >= 1.0)) throw ValidationError("radius_out_of_range", "stopping radius R must be >= 1");
  if (!(big_m > big_r)) throw ValidationError("cutoff_out_of_range", "cutoff level M must exceed R");
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw ValidationError("coefficient_not_finite", "alpha and beta must be finite");
}

HypothesisReport check_hypothesis(const ModelParams& params) {
  validate_q_d(params);
  HypothesisReport r;
  const double q = params.q;
  r.theta = theta_of(q);
  r.beta_bound = std::sqrt(2.0 * q + 1.0) / q;
  r.condition1_lhs = -(1.0 + params.alpha * params.beta);
  r.condition1_rhs = std::abs(params.alpha - params.beta) * r.beta_bound;
  r.condition1_ok = r.condition1_lhs < r.condition1_rhs;
  r.condition2_ok = std::abs(params.beta) <= r.beta_bound;
  r.satisfied = r.condition1_ok && r.condition2_ok;
  const double scale1 = 1.0 + std::abs(r.condition1_lhs) + std::abs(r.condition1_rhs);
  r.boundary_warning = std::abs(r.condition1_rhs - r.condition1_lhs) <= kBoundaryTol * scale1 ||
                       std::abs(std::abs(params.beta) - r.beta_bound) <= kBoundaryTol * r.beta_bound;
  return r;
}

double dissipativity_bracket(const ModelParams& params, double lambda, double epsilon) {
  const double th = theta_of(params.q);
  const double mix = std::abs(lambda * params.beta - (1.0 - lambda) * params.alpha);
  return 2.0 * (1.0 - epsilon) * std::sqrt(std::max(0.0, lambda * (1.0 - lambda))) + std::cos(th) -
         mix * std::sin(th);
}

DissipativityMargin margin(const ModelParams& params, double epsilon) {
  const HypothesisReport rep = check_hypothesis(params);
  if (!rep.satisfied)
    throw ValidationError("hypothesis_unsatisfied", "margin requires the dissipativity hypothesis to hold");
  DissipativityMargin m;
  m.epsilon = std::clamp(epsilon, std::numeric_limits<double>::min(), 1.0);
  const double s = std::sin(rep.theta);
  const double cot = std::cos(rep.theta) / s;
  m.margin_value = -(1.0 + params.alpha * params.beta) - std::abs(params.beta - params.alpha) * cot +
                   m.epsilon * (2.0 - m.epsilon) / (s * s);
  const auto [eta, val] = maximize_bracket(params, m.epsilon);
  m.eta = eta;
  m.lambda = std::cos(eta) * std::cos(eta);
  m.bracket_value = val;
  return m;
}

double feasible_epsilon_max(const ModelParams& params) {
  const HypothesisReport rep = check_hypothesis(params);
  if (!rep.satisfied) return 0.0;
  const double s2 = std::sin(rep.theta) * std::sin(rep.theta);
  const double base = -(1.0 + params.alpha * params.beta) -
                      std::abs(params.beta - params.alpha) * std::cos(rep.theta) / std::sin(rep.theta);
  auto value = [&](double e) { return base + e * (2.0 - e) / s2; };
  if (value(1.0) <= 0.0) return 1.0;
  if (!(base < 0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (value(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace sgl
