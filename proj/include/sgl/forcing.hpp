#pragma once

#include <cstdint>
#include <vector>

#include "sgl/field.hpp"

namespace sgl {

/// One term amplitude * cos(p.x + base_phase + harmonic * y[group]) of the
/// almost-periodic profile xi.
struct ForcingMode {
  Point wave_vector{0.0, 0.0};
  double amplitude = 0.0;
  double base_phase = 0.0;
  int group = -1;    // torus coordinate driving this mode; -1 means its own group
  int harmonic = 1;  // integer multiple of the group phase
};

struct ForcingProfile {
  std::vector<ForcingMode> modes;

  /// Dimension k of the phase torus (number of distinct groups).
  int torus_dim() const;
  /// Torus coordinate index of mode i.
  int group_of(std::size_t i) const;
  /// sum_j |a_j| |p_j|^m, the smoothness budget at order m.
  double derivative_sum(int m) const;
  void validate(int d) const;
  /// xi at x for torus phase point y.
  double evaluate(const Point& x, const std::vector<double>& y, int d) const;
};

enum class DriftMode { frozen, torus_brownian };

/// One noise sample omega = (Wiener path, y0). Increments come from a
/// counter-based generator so any step is addressable; `offset_steps` encodes
/// the time shift theta^tau.
struct NoiseRealization {
  ForcingProfile profile;
  std::uint64_t seed = 0;
  std::vector<double> y0;
  DriftMode drift = DriftMode::frozen;
  double diffusion = 0.0;
  double dt = 1e-3;
  std::int64_t offset_steps = 0;
  double w_offset = 0.0;  // w at the shifted origin, for the torus drift

  /// Gaussian increment of step `step` (covering [step dt, (step+1) dt)).
  double dw(std::int64_t step) const;
  /// Torus phase y0 + z, z = sqrt(2 D) w, for the Wiener value w measured
  /// from the unshifted origin (the drift is driven by the same path).
  std::vector<double> phase(double w_abs) const;
  /// Step index for time t; throws AlignmentError if t is off the dt lattice.
  std::int64_t step_of(double t) const;
  /// theta^tau omega; tau must be a non-negative multiple of dt.
  NoiseRealization shifted(double tau) const;
};

NoiseRealization sample_realization(const ForcingProfile& profile, std::uint64_t seed, double dt,
                                    DriftMode drift = DriftMode::frozen, double diffusion = 0.0);

/// Same as sample_realization but with y0 fixed (pinned-phase control).
NoiseRealization pinned_realization(const ForcingProfile& profile, std::uint64_t seed, double dt,
                                    std::vector<double> y0);

Field xi_field(const ForcingProfile& profile, const std::vector<double>& phase_point, const Grid& grid);

struct Increment {
  Field xi;
  double dw = 0.0;
};

/// (xi_{y0+z(t)}, dw) for the step starting at t.
Increment increment(const NoiseRealization& realization, double t, const Grid& grid);

}  // namespace sgl
