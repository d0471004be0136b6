#pragma once

// Model coefficients of du = ((1+i alpha) Lap u + u - (1+i beta)|u|^{2q} u) dt + xi dw
// and the dissipativity conditions under which its solutions stay bounded.

namespace sgl {

struct ModelParams {
  double alpha = 0.5;  // dispersion
  double beta = 0.5;   // nonlinear frequency
  double q = 1.0;      // nonlinearity exponent
  int d = 1;           // spatial dimension
  double big_r = 2.0;  // stopping radius R
  double big_m = 4.0;  // Lipschitz cutoff level M

  /// Full invariant check: q > 1/2, d in {1,2}, M > R >= 1.
  void validate() const;
};

struct HypothesisReport {
  double condition1_lhs = 0.0;  // -(1 + alpha beta)
  double condition1_rhs = 0.0;  // |alpha - beta| sqrt(2q+1)/q
  bool condition1_ok = false;   // strict
  double beta_bound = 0.0;      // sqrt(2q+1)/q
  bool condition2_ok = false;   // |beta| <= beta_bound
  double theta = 0.0;           // arcsin(q/(1+q)), radians
  bool satisfied = false;
  bool boundary_warning = false;  // an inequality holds with (near) equality
};

struct DissipativityMargin {
  double lambda = 0.0;   // cos^2 of the optimal eta
  double eta = 0.0;
  double epsilon = 0.0;
  double margin_value = 0.0;   // feasible iff <= 0
  double bracket_value = 0.0;  // max over eta of the bracket
};

/// Throws ValidationError ("q_out_of_range" / "dimension_unsupported") when
/// q <= 1/2 or d is not 1 or 2.
HypothesisReport check_hypothesis(const ModelParams& params);

/// The bracket 2(1-eps)sqrt(lambda(1-lambda)) + cos(theta)
///   - |lambda beta - (1-lambda) alpha| sin(theta)
/// whose positivity for some lambda controls the H1 estimate.
double dissipativity_bracket(const ModelParams& params, double lambda, double epsilon);

/// Requires check_hypothesis(params).satisfied, otherwise throws
/// ValidationError("hypothesis_unsatisfied"). Epsilon is clamped to (0, 1].
DissipativityMargin margin(const ModelParams& params, double epsilon);

/// Largest epsilon in (0, 1] with margin_value <= 0 (bisection, abs tol 1e-12).
/// Returns 0 when the hypothesis fails.
double feasible_epsilon_max(const ModelParams& params);

}  // namespace sgl
