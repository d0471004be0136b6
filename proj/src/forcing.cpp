#include "sgl/forcing.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/rng.hpp"

namespace sgl {

namespace {

constexpr std::uint64_t kPhaseTag = 0x7068617365ULL;  // separates y0 draws from increments

std::vector<int> group_indices(const std::vector<ForcingMode>& modes, int* count) {
  std::map<long, int> ids;
  std::vector<int> out;
  out.reserve(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const long key = modes[i].group >= 0 ? modes[i].group : -1 - static_cast<long>(i);
    auto [it, inserted] = ids.try_emplace(key, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  if (count) *count = static_cast<int>(ids.size());
  return out;
}

}  // namespace

int ForcingProfile::torus_dim() const {
  int k = 0;
  group_indices(modes, &k);
  return k;
}

int ForcingProfile::group_of(std::size_t i) const { return group_indices(modes, nullptr).at(i); }

double ForcingProfile::derivative_sum(int m) const {
  double s = 0.0;
  for (const auto& md : modes) {
    const double p = std::hypot(md.wave_vector[0], md.wave_vector[1]);
    s += std::abs(md.amplitude) * std::pow(p, m);
  }
  return s;
}

void ForcingProfile::validate(int d) const {
  if (modes.empty()) throw ValidationError("forcing_empty", "forcing profile needs at least one mode");
  for (const auto& md : modes) {
    if (!std::isfinite(md.amplitude) || !std::isfinite(md.base_phase) || !std::isfinite(md.wave_vector[0]) ||
        !std::isfinite(md.wave_vector[1]))
      throw ValidationError("forcing_invalid", "forcing mode entries must be finite");
    if (d == 1 && md.wave_vector[1] != 0.0)
      throw ValidationError("forcing_invalid", "one-dimensional profile has a second wave-vector component");
  }
}

double ForcingProfile::evaluate(const Point& x, const std::vector<double>& y, int d) const {
  const auto groups = group_indices(modes, nullptr);
  double s = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& md = modes[i];
    double arg = md.base_phase + md.harmonic * y.at(groups[i]);
    for (int k = 0; k < d; ++k) arg += md.wave_vector[k] * x[k];
    s += md.amplitude * std::cos(arg);
  }
  return s;
}

double NoiseRealization::dw(std::int64_t step) const {
  const auto idx = static_cast<std::uint64_t>(offset_steps + step);
  return std::sqrt(dt) * stream_normal(seed, idx);
}

std::vector<double> NoiseRealization::phase(double w_abs) const {
  if (drift == DriftMode::frozen) return y0;
  std::vector<double> y = y0;
  const double z = std::sqrt(2.0 * diffusion) * w_abs;
  for (double& v : y) v += z;
  return y;
}

std::int64_t NoiseRealization::step_of(double t) const {
  const double k = t / dt;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 * std::max(1.0, std::abs(k)) || r < 0.0) {
    std::ostringstream os;
    os << "time " << t << " is not a non-negative multiple of dt = " << dt;
    throw AlignmentError(os.str());
  }
  return static_cast<std::int64_t>(r);
}

NoiseRealization NoiseRealization::shifted(double tau) const {
  const std::int64_t k = step_of(tau);
  NoiseRealization r = *this;
  double w = w_offset;
  for (std::int64_t i = 0; i < k; ++i) w += dw(i);
  r.offset_steps = offset_steps + k;
  r.w_offset = w;
  return r;
}

NoiseRealization sample_realization(const ForcingProfile& profile, std::uint64_t seed, double dt,
                                    DriftMode drift, double diffusion) {
  if (!(dt > 0.0)) throw ValidationError("dt_invalid", "dt must be positive");
  if (drift == DriftMode::torus_brownian && !(diffusion >= 0.0))
    throw ValidationError("diffusion_invalid", "torus diffusion must be non-negative");
  NoiseRealization r;
  r.profile = profile;
  r.seed = seed;
  r.drift = drift;
  r.diffusion = diffusion;
  r.dt = dt;
  const int k = profile.torus_dim();
  r.y0.resize(k);
  for (int j = 0; j < k; ++j)
    r.y0[j] = 2.0 * std::numbers::pi * (1.0 - to_unit(counter_hash(seed ^ kPhaseTag, static_cast<std::uint64_t>(j))));
  return r;
}

NoiseRealization pinned_realization(const ForcingProfile& profile, std::uint64_t seed, double dt,
                                    std::vector<double> y0) {
  NoiseRealization r = sample_realization(profile, seed, dt);
  if (static_cast<int>(y0.size()) != profile.torus_dim())
    throw ValidationError("phase_dim_mismatch", "pinned phase has the wrong torus dimension");
  r.y0 = std::move(y0);
  return r;
}

Field xi_field(const ForcingProfile& profile, const std::vector<double>& phase_point, const Grid& grid) {
  if (static_cast<int>(phase_point.size()) < profile.torus_dim())
    throw ValidationError("phase_dim_mismatch", "phase point has fewer coordinates than the torus");
  Field f = Field::zeros(grid);
  const auto groups = group_indices(profile.modes, nullptr);
  for (std::size_t m = 0; m < profile.modes.size(); ++m) {
    const auto& md = profile.modes[m];
    if (md.amplitude == 0.0) continue;
    const double shift = md.base_phase + md.harmonic * phase_point[groups[m]];
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Point x = grid.point(i);
      double arg = shift + md.wave_vector[0] * x[0];
      if (grid.d == 2) arg += md.wave_vector[1] * x[1];
      f[i] += md.amplitude * std::cos(arg);
    }
  }
  return f;
}

Increment increment(const NoiseRealization& realization, double t, const Grid& grid) {
  const std::int64_t step = realization.step_of(t);
  double w = realization.w_offset;
  if (realization.drift == DriftMode::torus_brownian)
    for (std::int64_t i = 0; i < step; ++i) w += realization.dw(i);
  return {xi_field(realization.profile, realization.phase(w), grid), realization.dw(step)};
}

}  // namespace sgl
