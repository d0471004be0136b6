#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/forcing.hpp"
#include "sgl/model.hpp"
#include "sgl/solver.hpp"

namespace sgl {

struct KernelConfig {
  double p_star = 5.0;
  double alpha = 0.0;
  int quadrature_points = 16;  // Gauss-Legendre nodes per panel
  double rel_tol = 1e-11;      // panel doubling stops when successive results agree
  double x_max = 20.0;         // extent of the decay-fit x grid
  double x_step = 0.05;

  void validate() const;
};

/// Smooth monotone ramp: 1 for s <= 1, 0 for s >= 2, infinitely differentiable.
double chi(double s);

enum class KernelPart { minus, plus, full };

/// Fourier quadrature (1/2pi) int e^{ipx} S(p) dp of the symbol
/// S = exp(t(1 - (1+i alpha)p^2)) times chi(|p|/p*) (minus), 1 - chi (plus) or 1 (full).
cplx kernel_quadrature(KernelPart part, double t, double x, const KernelConfig& config);
cplx kernel_minus(double t, double x, const KernelConfig& config);
cplx kernel_plus(double t, double x, const KernelConfig& config);
/// Closed form e^t / sqrt(4 pi t (1+i alpha)) exp(-x^2 / (4 t (1+i alpha))).
cplx kernel_full(double t, double x, double alpha);

struct KernelDecayFit {
  int n = 1;
  KernelPart part = KernelPart::minus;
  double c_n = 0.0;
  double max_violation = 0.0;  // max over the verification grid of |K|/bound - 1
  std::size_t fit_points = 0;
  std::size_t verify_points = 0;
};

/// Fits the smallest c_n with |K_t(x)| <= c_n t^{-1/2} (1 + x^2/t)^{-n}
/// (times e^{-(p*)^2 t/2} for the high part) on x in [0, x_max], then checks
/// the bound on a shifted grid reaching 2 x_max. n in {1,2,3}; t >= 0.5.
KernelDecayFit verify_kernel_decay(const KernelConfig& config, int n, const std::vector<double>& t_list,
                                   KernelPart part = KernelPart::minus);

struct EnvelopeFit {
  double constant = 0.0;
  double max_violation = 0.0;
  std::vector<double> t_verify, sup_values;
};

/// sup_x |K^(+)_t| <= const e^{-(p*)^2 t/2} / sqrt(t): const fitted on t_fit,
/// violations measured on t_verify.
EnvelopeFit fit_plus_envelope(const KernelConfig& config, const std::vector<double>& t_fit,
                              const std::vector<double>& t_verify);

struct CartwrightGrid {
  double p_star = 5.0;
  int n_max = 1024;
  double margin = -1.0;  // negative: half of the half-span

  double node(int n) const;
  double half_span() const;
  double safe_margin() const { return margin < 0.0 ? 0.5 * half_span() : margin; }
  /// Samples f at the nodes n = -n_max..n_max.
  template <class F>
  std::vector<cplx> sample(F&& f) const {
    std::vector<cplx> s;
    s.reserve(2 * n_max + 1);
    for (int n = -n_max; n <= n_max; ++n) s.push_back(f(node(n)));
    return s;
  }
};

/// Band-limited reconstruction from node samples ordered n = -n_max..n_max.
/// Throws ValidationError("truncation_domain") outside the safe interior.
cplx cartwright_interpolate(std::span<const cplx> samples, const CartwrightGrid& grid, double x);

struct RefinedCover {
  std::size_t input_count = 0;
  std::size_t nodes = 0;  // Cartwright nodes inside the window
  std::vector<std::vector<std::int64_t>> cells;
  std::vector<std::size_t> source;  // input index of each cell's representative
  std::vector<Field> representatives;
};

/// One refinement of an ensemble cover: evolves each representative for one
/// time unit, samples the result at the Cartwright nodes inside `window`,
/// quantizes real and imaginary parts to eps/2 boxes and keeps one
/// representative per occupied cell. Requires d = 1.
RefinedCover cover_refine_step(const std::vector<Field>& representatives, const NoiseRealization& realization,
                               const ModelParams& params, const SolverConfig& config, const Window& window,
                               double eps, double p_star = 5.0);

std::string to_string(KernelPart p);

}  // namespace sgl
