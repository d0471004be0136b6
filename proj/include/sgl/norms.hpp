#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

/// phi_{delta,y}(x) = exp(-sqrt(1 + delta^2 |x - y|^2)), Euclidean distance in R^d.
double weight_at(const WeightSpec& spec, const Point& x, int d = 1);

struct WeightDerivativeReport {
  int order = 1;
  double ratio_sup = 0.0;  // numerical sup of |grad^n phi / phi|
  double bound = 0.0;      // A_n delta^n
  double a_n = 1.0;
};

/// Sup of |grad^n phi/phi| over a fine radial grid, by finite differences.
/// order must be 1 or 2.
WeightDerivativeReport weight_derivative_ratio(const WeightSpec& spec, int order, int d = 1);

/// Weight of every grid point for a centre y, summed over periodic images so
/// that grid integrals equal integrals of the periodic extension over R^d.
std::vector<double> periodized_weight(const WeightSpec& spec, const Grid& g);

double local_l2_norm(const Field& f, const WeightSpec& spec);
double hm_local_norm(const Field& f, const WeightSpec& spec, int m);

struct UlNorm {
  double value = 0.0;
  double lattice_spacing = 1.0;  // effective spacing of the centre lattice
  std::size_t centers = 0;
  std::vector<Point> argmax;  // maximising centre per derivative order k <= m
};

/// Uniformly-local norm: sqrt(sum_{k<=m} sup_y ||grad^k f||^2_{delta,y}) with
/// the sup taken over a centre lattice tiling the box at spacing <= lattice_spacing.
UlNorm hm_ul_norm(const Field& f, double delta, int m, double lattice_spacing = 1.0);

double sup_norm(const Field& f);
double sup_norm(const Field& f, const Window& window);

/// Reusable evaluator for repeated norm computations on one grid: caches the
/// FFT plans and the weights of the centre lattice.
class NormEvaluator {
public:
  NormEvaluator(const Grid& g, double delta, double lattice_spacing = 1.0);

  const Grid& grid() const { return grid_; }
  double delta() const { return delta_; }
  const std::vector<Point>& centers() const { return centers_; }
  double effective_spacing() const { return spacing_; }

  /// Squared local norms ||grad^k f||^2_{delta,y} at every lattice centre, k <= m.
  std::vector<std::vector<double>> local_terms(const Field& f, int m) const;
  double local(const Field& f, const WeightSpec& spec, int m) const;
  UlNorm ul(const Field& f, int m) const;
  const Spectral& spectral() const { return *spectral_; }

private:
  const std::vector<double>& weight(std::size_t c, std::vector<double>& scratch) const;

  Grid grid_;
  double delta_;
  double spacing_;
  std::vector<Point> centers_;
  std::vector<std::vector<double>> weights_;  // empty when too large to cache
  std::unique_ptr<Spectral> spectral_;
};

/// Weighted grid integral sum_x h^d w(x) rho(x).
double weighted_integral(const std::vector<double>& w, const std::vector<double>& rho, const Grid& g);

}  // namespace sgl
