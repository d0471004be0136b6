#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgl/field.hpp"

struct fftw_plan_s;

namespace sgl {

/// FFTW plans for one grid. Transforms act in place on any array of grid size.
/// backward() includes the 1/N normalisation. An instance must not be shared
/// between threads while transforming.
class Spectral {
public:
  explicit Spectral(const Grid& grid);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const Grid& grid() const { return grid_; }
  void forward(std::span<cplx> data) const;
  void backward(std::span<cplx> data) const;

  /// Angular wavenumber of FFT index i along one axis (Nyquist taken negative).
  double wavenumber(int i) const;
  /// |p|^2 per flat spectral index.
  const std::vector<double>& k2() const { return k2_; }
  /// Component `axis` of p per flat spectral index, with the Nyquist entry
  /// zeroed so that odd derivatives of real data stay real.
  const std::vector<double>& k_axis(int axis) const { return axis == 0 ? kx_ : ky_; }
  /// 1 for modes kept by the 2/3 rule, 0 otherwise.
  const std::vector<double>& dealias_mask() const { return mask_; }

private:
  Grid grid_;
  fftw_plan_s* fwd_ = nullptr;
  fftw_plan_s* bwd_ = nullptr;
  std::vector<double> k2_, kx_, ky_, mask_;
};

/// Pointwise squared Frobenius norm of the m-th derivative tensor of f,
/// |grad^m f|^2, computed spectrally.
std::vector<double> derivative_density(const Field& f, int m, const Spectral& sp);

/// Random smooth field: complex Gaussian Fourier coefficients for |p| <= k_max
/// with decay 1/(1 + |p|^2), rescaled so that its sup over the grid equals `sup`.
Field random_band_limited(const Grid& g, std::uint64_t seed, double k_max, double sup, const Spectral& sp);

/// Trigonometric interpolation of a 1-d field at arbitrary x.
cplx fourier_interpolate(const std::vector<cplx>& spectrum, const Grid& g, double x);

}  // namespace sgl
