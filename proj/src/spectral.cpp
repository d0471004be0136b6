#include "sgl/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "sgl/errors.hpp"
#include "sgl/rng.hpp"

namespace sgl {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

cplx ipow(cplx z, int e) {
  cplx r = 1.0;
  for (int i = 0; i < e; ++i) r *= z;
  return r;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

Spectral::Spectral(const Grid& grid) : grid_(grid) {
  grid_.validate();
  const int n = grid_.points_per_dim;
  const std::size_t total = grid_.size();
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* buf = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (grid_.d == 1) {
      fwd_ = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
      bwd_ = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
    } else {
      fwd_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, flags);
      bwd_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, flags);
    }
    fftw_free(buf);
  }
  if (fwd_ == nullptr || bwd_ == nullptr) throw Error(ErrorKind::runtime, "fft_plan", "FFTW planning failed");

  k2_.resize(total);
  kx_.resize(total);
  ky_.assign(total, 0.0);
  mask_.resize(total);
  const int cut = n / 3;
  auto keep = [&](int i) {
    const int s = i <= n / 2 ? i : n - i;
    return s <= cut;
  };
  auto odd_k = [&](int i) { return i == n / 2 ? 0.0 : wavenumber(i); };
  if (grid_.d == 1) {
    for (int i = 0; i < n; ++i) {
      const double k = wavenumber(i);
      k2_[i] = k * k;
      kx_[i] = odd_k(i);
      mask_[i] = keep(i) ? 1.0 : 0.0;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t f = static_cast<std::size_t>(i) * n + j;
        const double a = wavenumber(i);
        const double b = wavenumber(j);
        k2_[f] = a * a + b * b;
        kx_[f] = odd_k(i);
        ky_[f] = odd_k(j);
        mask_[f] = keep(i) && keep(j) ? 1.0 : 0.0;
      }
    }
  }
}

Spectral::~Spectral() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(fwd_);
  if (bwd_) fftw_destroy_plan(bwd_);
}

double Spectral::wavenumber(int i) const {
  const int n = grid_.points_per_dim;
  const int s = i < n / 2 ? i : i - n;
  return 2.0 * std::numbers::pi * s / grid_.box_length;
}

void Spectral::forward(std::span<cplx> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(fwd_, p, p);
}

void Spectral::backward(std::span<cplx> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(bwd_, p, p);
  const double s = 1.0 / static_cast<double>(data.size());
  for (cplx& z : data) z *= s;
}

std::vector<double> derivative_density(const Field& f, int m, const Spectral& sp) {
  if (m < 0) throw ValidationError("order_invalid", "derivative order must be non-negative");
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  if (m == 0) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::norm(f[i]);
    return out;
  }
  std::vector<cplx> hat = f.values;
  sp.forward(hat);
  const auto& kx = sp.k_axis(0);
  const auto& ky = sp.k_axis(1);
  const int d = f.grid.d;
  std::vector<cplx> work(n);
  for (int a = m; a >= (d == 1 ? m : 0); --a) {
    const int b = m - a;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx ikx(0.0, kx[i]);
      const cplx iky(0.0, ky[i]);
      work[i] = hat[i] * ipow(ikx, a) * ipow(iky, b);
    }
    sp.backward(work);
    const double mult = binomial(m, a);
    for (std::size_t i = 0; i < n; ++i) out[i] += mult * std::norm(work[i]);
  }
  return out;
}

Field random_band_limited(const Grid& g, std::uint64_t seed, double k_max, double sup, const Spectral& sp) {
  Field f = Field::zeros(g);
  SplitMix rng(seed);
  const auto& k2 = sp.k2();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    if (k2[i] <= k_max * k_max) f[i] = cplx(a, b) / (1.0 + k2[i]);
  }
  sp.backward(f.values);
  double m = 0.0;
  for (const cplx& z : f.values) m = std::max(m, std::abs(z));
  if (m > 0.0)
    for (cplx& z : f.values) z *= sup / m;
  return f;
}

cplx fourier_interpolate(const std::vector<cplx>& spectrum, const Grid& g, double x) {
  const int n = g.points_per_dim;
  const double s = x + 0.5 * g.box_length;
  const double k0 = 2.0 * std::numbers::pi / g.box_length;
  cplx acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const int m = i < n / 2 ? i : i - n;
    if (i == n / 2)
      acc += spectrum[i] * std::cos(k0 * m * s);
    else
      acc += spectrum[i] * std::polar(1.0, k0 * m * s);
  }
  return acc / static_cast<double>(n);
}

}  // namespace sgl
