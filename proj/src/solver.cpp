#include "sgl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/norms.hpp"

namespace sgl {

namespace {

bool aligned(double t, double dt) {
  const double k = t / dt;
  return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
}

double nonlinear_power(double r2, double q) {
  if (q == 1.0) return r2;
  if (q == 2.0) return r2 * r2;
  return std::pow(r2, q);
}

// Records the standard diagnostics of one trajectory.
class Recorder {
public:
  Recorder(const Grid& g, const SolverConfig& cfg) : cfg_(cfg), obs_(g) {
    if (cfg.record_norms) {
      norms_ = std::make_unique<NormEvaluator>(g, cfg.norm_delta, cfg.lattice_spacing);
      w0_ = periodized_weight({cfg.norm_delta, {0.0, 0.0}}, g);
    }
    for (double r : cfg.stopping_radii) rec_.stopping.push_back({r, std::nullopt});
    for (const auto& o : cfg.observables) rec_.observable_names.push_back(o.name);
    rec_.observable_values.resize(cfg.observables.size());
  }

  void sample(double t, const Field& u) {
    rec_.times.push_back(t);
    rec_.sup_norm.push_back(sup_norm(u));
    if (norms_) {
      const auto terms = norms_->local_terms(u, 2);
      double acc = 0.0;
      std::vector<double>* cols[3] = {&rec_.h0ul, &rec_.h1ul, &rec_.h2ul};
      for (int k = 0; k < 3; ++k) {
        acc += *std::max_element(terms[k].begin(), terms[k].end());
        cols[k]->push_back(std::sqrt(acc));
      }
      rec_.l2loc_0.push_back(std::sqrt(weighted_integral(w0_, derivative_density(u, 0, norms_->spectral()), u.grid)));
    }
    for (std::size_t i = 0; i < cfg_.observables.size(); ++i)
      rec_.observable_values[i].push_back(obs_(cfg_.observables[i], u));
  }

  void check_stopping(double t, const Field& u) {
    double s = -1.0;
    for (auto& ev : rec_.stopping) {
      if (ev.time) continue;
      if (s < 0.0) s = sup_norm(u);
      if (s >= ev.radius) ev.time = t;
    }
  }

  TrajectoryRecord take(const Field& final_state) {
    rec_.final_state = final_state;
    return std::move(rec_);
  }
  TrajectoryRecord& record() { return rec_; }

private:
  const SolverConfig& cfg_;
  ObservableEvaluator obs_;
  std::unique_ptr<NormEvaluator> norms_;
  std::vector<double> w0_;
  TrajectoryRecord rec_;
};

void check_realization(const NoiseRealization& r, const SolverConfig& cfg) {
  if (std::abs(r.dt - cfg.dt) > 1e-15 * cfg.dt)
    throw ValidationError("dt_mismatch", "solver dt differs from the realization increment step");
}

}  // namespace

Scheme scheme_from_string(const std::string& s) {
  if (s == "etd1") return Scheme::etd1;
  if (s == "etd2") return Scheme::etd2;
  throw ValidationError("scheme_unknown", "unknown scheme '" + s + "'");
}

std::string to_string(Scheme s) { return s == Scheme::etd1 ? "etd1" : "etd2"; }

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("dt_invalid", "dt must be positive");
  if (!(t_end >= dt * (1.0 - 1e-12))) throw ValidationError("t_end_invalid", "t_end must be at least dt");
  if (!aligned(t_end, dt)) throw AlignmentError("t_end is not a multiple of dt");
  if (record_stride < 1) throw ValidationError("record_stride_invalid", "record_stride must be >= 1");
  if (!(cutoff_smoothing > 0.0)) throw ValidationError("cutoff_smoothing_invalid", "cutoff_smoothing must be positive");
  if (!(norm_delta > 0.0)) throw ValidationError("delta_invalid", "norm_delta must be positive");
  if (!(lattice_spacing > 0.0)) throw ValidationError("lattice_invalid", "lattice_spacing must be positive");
  for (double t : checkpoint_times)
    if (!aligned(t, dt) || t < 0.0 || t > t_end + 0.5 * dt)
      throw AlignmentError("checkpoint time is off the dt lattice or outside [0, t_end]");
  for (double r : stopping_radii)
    if (!(r > 0.0)) throw ValidationError("radius_invalid", "stopping radii must be positive");
}

std::int64_t SolverConfig::steps() const { return static_cast<std::int64_t>(std::llround(t_end / dt)); }

cplx linear_multiplier(double p_squared, double t, double alpha) {
  return std::exp(cplx(t * (1.0 - p_squared), -t * alpha * p_squared));
}

double cutoff_ramp(double r, double big_m, double width) {
  if (r <= big_m) return 1.0;
  if (r >= big_m + width) return 0.0;
  const double s = (r - big_m) / width;
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

Field nonlinearity(const Field& u, const ModelParams& params, bool with_cutoff, double smoothing) {
  Field out = u;
  const cplx c(-1.0, -params.beta);
  for (cplx& z : out.values) {
    const double r2 = std::norm(z);
    double f = nonlinear_power(r2, params.q);
    if (with_cutoff) f *= cutoff_ramp(std::sqrt(r2), params.big_m, smoothing);
    z = c * f * z;
  }
  return out;
}

Stepper::Stepper(const Grid& grid, const ModelParams& params, const SolverConfig& config,
                 const NoiseRealization& realization)
    : grid_(grid), params_(params), config_(config), realization_(realization), spectral_(grid) {
  check_realization(realization, config);
  const std::size_t n = grid.size();
  ec_.resize(n);
  const auto& k2 = spectral_.k2();
  for (std::size_t i = 0; i < n; ++i) ec_[i] = linear_multiplier(k2[i], config.dt, params.alpha);
  dealias_ = config.dealias && (params.q == 1.0 || params.q == 2.0);
  if (realization.drift == DriftMode::frozen) {
    Field xi = xi_field(realization.profile, realization.y0, grid);
    xi_hat_e_ = xi.values;
    spectral_.forward(xi_hat_e_);
    for (std::size_t i = 0; i < n; ++i) xi_hat_e_[i] *= ec_[i];
  }
  u_hat_.resize(n);
  n0_.resize(n);
  n1_.resize(n);
  work_.resize(n);
  u_ = Field::zeros(grid);
  u_star_ = Field::zeros(grid);
}

Stepper::~Stepper() = default;

void Stepper::reset(const Field& u0) {
  if (!(u0.grid == grid_)) throw ValidationError("grid_mismatch", "initial field is on a different grid");
  if (!u0.finite()) throw ValidationError("initial_not_finite", "initial field has non-finite values");
  u_ = u0;
  u_hat_ = u0.values;
  spectral_.forward(u_hat_);
  step_ = 0;
  w_abs_ = realization_.w_offset;
}

void Stepper::nonlinear_hat(const Field& u, std::vector<cplx>& out) {
  const cplx c = cplx(-1.0, -params_.beta) * config_.nonlinearity_scale;
  const bool cut = config_.use_cutoff;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const cplx z = u[i];
    const double r2 = std::norm(z);
    double f = nonlinear_power(r2, params_.q);
    if (cut) f *= cutoff_ramp(std::sqrt(r2), params_.big_m, config_.cutoff_smoothing);
    out[i] = c * f * z;
  }
  spectral_.forward(out);
  if (dealias_) {
    const auto& mask = spectral_.dealias_mask();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  }
}

void Stepper::noise_term(std::vector<cplx>& out, double dw) {
  if (realization_.drift == DriftMode::frozen) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xi_hat_e_[i] * dw;
    return;
  }
  Field xi = xi_field(realization_.profile, realization_.phase(w_abs_), grid_);
  out = std::move(xi.values);
  spectral_.forward(out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= ec_[i] * dw;
}

void Stepper::advance() {
  const double dt = config_.dt;
  const double dw = realization_.dw(step_);
  const std::size_t n = u_hat_.size();
  nonlinear_hat(u_, n0_);
  noise_term(work_, dw);
  for (std::size_t i = 0; i < n; ++i) u_hat_[i] = ec_[i] * (u_hat_[i] + dt * n0_[i]) + work_[i];
  if (config_.scheme == Scheme::etd2) {
    u_star_.values = u_hat_;
    spectral_.backward(u_star_.values);
    nonlinear_hat(u_star_, n1_);
    for (std::size_t i = 0; i < n; ++i) u_hat_[i] += 0.5 * dt * (n1_[i] - ec_[i] * n0_[i]);
  }
  u_.values = u_hat_;
  spectral_.backward(u_.values);
  ++step_;
  w_abs_ += dw;
  if (!u_.finite()) {
    std::ostringstream os;
    os << "non-finite solution at t = " << time();
    throw BlowUpError(time(), os.str());
  }
}

Field step(const Field& u, double t, const NoiseRealization& realization, const ModelParams& params,
           const SolverConfig& config) {
  const std::int64_t k = realization.step_of(t);
  Stepper s(u.grid, params, config, realization.shifted(static_cast<double>(k) * realization.dt));
  s.reset(u);
  s.advance();
  return s.state();
}

TrajectoryRecord evolve(const Field& u0, const NoiseRealization& realization, const ModelParams& params,
                        const SolverConfig& config) {
  config.validate();
  Stepper stepper(u0.grid, params, config, realization);
  stepper.reset(u0);
  Recorder rec(u0.grid, config);
  std::set<std::int64_t> checkpoints;
  for (double t : config.checkpoint_times) checkpoints.insert(std::llround(t / config.dt));
  const std::int64_t total = config.steps();
  for (std::int64_t k = 0;; ++k) {
    const Field& u = stepper.state();
    rec.check_stopping(stepper.time(), u);
    if (k % config.record_stride == 0 || k == total) rec.sample(stepper.time(), u);
    if (checkpoints.count(k)) rec.record().checkpoints.emplace_back(stepper.time(), u);
    if (k == total) break;
    stepper.advance();
  }
  return rec.take(stepper.state());
}

double PairWindow::side_at(double t) const { return side - shrink * (1.0 + t) * std::log(1.0 / eps); }

PairResult pair_evolve(const Field& u0, const Field& v0, const NoiseRealization& realization,
                       const ModelParams& params, const SolverConfig& config, const PairWindow& window) {
  config.validate();
  if (!(u0.grid == v0.grid)) throw ValidationError("grid_mismatch", "pair fields are on different grids");
  if (!(window.eps > 0.0 && window.eps < 1.0)) throw ValidationError("eps_invalid", "pair eps must lie in (0, 1)");
  Window(window.side, window.center).validate_in(u0.grid);
  Stepper su(u0.grid, params, config, realization);
  Stepper sv(v0.grid, params, config, realization);
  su.reset(u0);
  sv.reset(v0);
  Recorder ru(u0.grid, config);
  Recorder rv(v0.grid, config);
  DivergenceSeries div;
  div.eps = window.eps;
  const std::int64_t total = config.steps();
  for (std::int64_t k = 0;; ++k) {
    const double t = su.time();
    ru.check_stopping(t, su.state());
    rv.check_stopping(t, sv.state());
    if (k % config.record_stride == 0 || k == total) {
      ru.sample(t, su.state());
      rv.sample(t, sv.state());
      const double side = window.side_at(t);
      if (side > u0.grid.spacing()) {
        const Field diff = su.state() - sv.state();
        div.times.push_back(t);
        div.window_side.push_back(side);
        div.sup_diff.push_back(sup_norm(diff, Window{side, window.center}));
      }
    }
    if (k == total) break;
    su.advance();
    sv.advance();
  }
  return {ru.take(su.state()), rv.take(sv.state()), std::move(div)};
}

StoppingEvent stopping_time(const TrajectoryRecord& record, double radius) {
  StoppingEvent ev{radius, std::nullopt};
  for (std::size_t i = 0; i < record.times.size(); ++i) {
    if (record.sup_norm[i] >= radius) {
      ev.time = record.times[i];
      break;
    }
  }
  return ev;
}

}  // namespace sgl
