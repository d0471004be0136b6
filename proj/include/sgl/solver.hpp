#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/forcing.hpp"
#include "sgl/model.hpp"
#include "sgl/observables.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

enum class Scheme { etd1, etd2 };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::etd2;
  int record_stride = 100;
  double cutoff_smoothing = 1.0;  // width of the P_M ramp
  bool use_cutoff = false;        // integrate the Lipschitz-truncated equation
  double nonlinearity_scale = 1.0;
  bool dealias = true;            // 2/3 rule for q in {1, 2}
  bool record_norms = true;       // l2loc_0 and hm_ul columns
  double norm_delta = 0.2;
  double lattice_spacing = 1.0;
  std::vector<double> stopping_radii;
  std::vector<double> checkpoint_times;
  std::vector<Observable> observables;

  void validate() const;
  std::int64_t steps() const;
};

/// exp(t (1 - (1 + i alpha) |p|^2)).
cplx linear_multiplier(double p_squared, double t, double alpha);

/// Smooth ramp equal to 1 for r <= M and 0 for r >= M + width (quintic smoothstep).
double cutoff_ramp(double r, double big_m, double width);

/// -(1 + i beta) [P_M(|u|)] |u|^{2q} u, pointwise.
Field nonlinearity(const Field& u, const ModelParams& params, bool with_cutoff, double smoothing = 1.0);

struct StoppingEvent {
  double radius = 0.0;
  std::optional<double> time;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> sup_norm;
  std::vector<double> l2loc_0;
  std::vector<double> h0ul, h1ul, h2ul;
  std::vector<std::string> observable_names;
  std::vector<std::vector<double>> observable_values;  // [observable][record]
  std::vector<StoppingEvent> stopping;                  // detected at every step
  std::vector<std::pair<double, Field>> checkpoints;
  Field final_state;
};

/// Integrates one trajectory under a realization. Holds the state in Fourier
/// space; one instance per thread.
class Stepper {
public:
  Stepper(const Grid& grid, const ModelParams& params, const SolverConfig& config,
          const NoiseRealization& realization);
  ~Stepper();

  void reset(const Field& u0);
  /// One time step; throws BlowUpError on non-finite values.
  void advance();
  const Field& state() const { return u_; }
  double time() const { return static_cast<double>(step_) * config_.dt; }
  std::int64_t step_index() const { return step_; }

private:
  void noise_term(std::vector<cplx>& out, double dw);
  void nonlinear_hat(const Field& u, std::vector<cplx>& out);

  Grid grid_;
  ModelParams params_;
  SolverConfig config_;
  NoiseRealization realization_;
  Spectral spectral_;
  std::vector<cplx> ec_;    // E = exp(dt L) per mode
  std::vector<cplx> xi_hat_e_;  // E xi_hat for the frozen drift
  std::vector<cplx> u_hat_, n0_, n1_, work_;
  Field u_, u_star_;
  std::int64_t step_ = 0;
  double w_abs_ = 0.0;
  bool dealias_ = false;
};

Field step(const Field& u, double t, const NoiseRealization& realization, const ModelParams& params,
           const SolverConfig& config);

TrajectoryRecord evolve(const Field& u0, const NoiseRealization& realization, const ModelParams& params,
                        const SolverConfig& config);

struct PairWindow {
  double side = 50.0;        // L
  double shrink = 2.0;       // C in L'(t) = L - C (1 + t) log(1/eps)
  double eps = 1e-6;
  Point center{0.0, 0.0};

  double side_at(double t) const;
};

struct DivergenceSeries {
  double eps = 0.0;
  std::vector<double> times;
  std::vector<double> window_side;
  std::vector<double> sup_diff;
};

struct PairResult {
  TrajectoryRecord u, v;
  DivergenceSeries divergence;
};

/// Evolves u0 and v0 under the same realization and records sup|u - v| on the
/// shrinking window while it is non-empty.
PairResult pair_evolve(const Field& u0, const Field& v0, const NoiseRealization& realization,
                       const ModelParams& params, const SolverConfig& config, const PairWindow& window);

StoppingEvent stopping_time(const TrajectoryRecord& record, double radius);

}  // namespace sgl
