#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/forcing.hpp"
#include "sgl/model.hpp"
#include "sgl/solver.hpp"
#include "sgl/stats.hpp"

namespace sgl {

/// Finite point set with the sup metric max_i |a_i - b_i| over complex coordinates.
struct PointCloud {
  std::size_t dim = 0;
  std::vector<cplx> data;  // row-major, size() * dim entries

  std::size_t size() const { return dim ? data.size() / dim : 0; }
  const cplx* row(std::size_t i) const { return data.data() + i * dim; }
  void push(const std::vector<cplx>& p);
};

double sup_distance(const cplx* a, const cplx* b, std::size_t dim);

enum class CoverMethod { greedy, exact };
CoverMethod cover_method_from_string(const std::string& s);
std::string to_string(CoverMethod m);

inline constexpr std::size_t kExactCoverLimit = 12;

struct CoverReport {
  double eps = 0.0;
  std::size_t count = 0;
  CoverMethod method = CoverMethod::greedy;
  double elapsed = 0.0;  // seconds
};

/// Smallest number of sets of diameter <= eps covering the points.
/// exact: minimum clique cover of the eps-closeness graph (at most 12 points).
/// greedy: farthest-point seeding with balls of radius eps/2 (a valid cover,
/// so never below exact).
CoverReport cover_count(const PointCloud& points, double eps, CoverMethod method);

/// Greedy counts for many eps from one farthest-point traversal; equal to
/// cover_count(points, eps, greedy).count for each entry.
std::vector<std::size_t> greedy_cover_counts(const PointCloud& points, const std::vector<double>& eps_list);

struct EnsembleSnapshot {
  std::vector<Field> fields;
  std::uint64_t realization_id = 0;
  double time = 0.0;
};

/// Attractor surrogate: `count` random smooth initial fields of sup norm
/// `radius` evolved to time T under one realization.
EnsembleSnapshot attractor_snapshot(const Grid& grid, const NoiseRealization& realization, const ModelParams& params,
                                    const SolverConfig& config, std::size_t count, double t_final, double radius,
                                    std::uint64_t init_seed, int threads = 1);

struct BowenSpec {
  int n = 1;
  double tau = 1.0;
  Window window;
  double eps = 0.1;
  void validate() const;
};

/// max_{k<n} sup_{Q} |Phi^{k tau}(u) - Phi^{k tau}(v)| under the shared realization.
double bowen_distance(const Field& u, const Field& v, const BowenSpec& spec, const NoiseRealization& realization,
                      const ModelParams& params, const SolverConfig& config);

/// States of every snapshot member at times k tau, k = 0..n_max.
struct OrbitEnsemble {
  Grid grid;
  double tau = 1.0;
  int n_max = 0;
  std::uint64_t realization_id = 0;
  std::vector<std::vector<Field>> orbits;  // [sample][k]
};

/// `realization` must already be positioned at the snapshot time.
OrbitEnsemble build_orbits(const EnsembleSnapshot& snapshot, const NoiseRealization& realization,
                           const ModelParams& params, const SolverConfig& config, double tau, int n_max,
                           int threads = 1);

/// Points: concatenated window samples of each orbit at k = 0..n-1.
PointCloud bowen_cloud(const OrbitEnsemble& orbits, const Window& window, int n);
PointCloud window_cloud(const std::vector<Field>& fields, const Window& window);

/// Shannon entropy -sum p log p with 0 log 0 = 0. Probabilities must be
/// non-negative and sum to 1 within 1e-12.
double partition_entropy(const std::vector<double>& probs);
/// H(U | V) from a joint table joint[u][v].
double conditional_entropy(const std::vector<std::vector<double>>& joint);

/// Labels indexed by (sample, time k, integer position).
struct SymbolTensor {
  std::size_t samples = 0;
  int n = 0;
  int positions = 0;
  std::vector<std::uint64_t> labels;

  std::uint64_t at(std::size_t s, int k, int x) const {
    return labels[(s * static_cast<std::size_t>(n) + k) * positions + x];
  }
};

/// Entropy of the empirical distribution of joint words over k < n_use and
/// positions [pos_begin, pos_begin + pos_count). `undersampled` is set when
/// some word occurs exactly once.
double block_entropy(const SymbolTensor& t, int n_use, int pos_begin, int pos_count, bool* undersampled = nullptr);

/// Quantization labels of the unit cubes Q_1 + x, x in Z, inside windows of
/// side L_max centred at each of `centers`; each centre contributes its own
/// samples. Boxes of side eps/sqrt(2) in real and imaginary parts give cells
/// of sup-diameter at most eps.
SymbolTensor label_orbits(const OrbitEnsemble& orbits, double eps, int l_max, int n_max,
                          const std::vector<double>& centers);

/// Propagated estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double raw = 0.0;  // before clamping at zero
  double se = 0.0;
  double residual = 0.0;
  bool degenerate = false;
};

/// OLS slope of y on x where each y carries its own standard error;
/// se = sqrt(se_ols^2 + sum_i w_i^2 se_i^2).
Estimate propagated_slope(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& y_se);

struct EntropyCell {
  double eps = 0.0;
  int L = 0;
  int n = 0;
  double tau = 0.0;
  std::size_t realization = 0;
  double log_n = 0.0;    // Bowen cover count
  double log_m = 0.0;    // eps-cover count of the time-0 window (NaN when n > 1)
  double h_block = 0.0;  // block entropy of the labelling
};

struct RateSlice {
  double eps = 0.0;
  std::vector<int> L;
  std::vector<Estimate> rate;  // per L: slope in n tau
  Estimate density;            // slope of rate in L^d
};

struct EntropyFlags {
  bool monotone_in_eps = true;         // log N / log M never decrease as eps shrinks
  bool h_eps_monotone = true;          // fitted H_eps non-increasing in eps
  bool undersampled = false;           // some block seen once
  std::vector<std::string> messages;
};

struct HTopResult {
  std::vector<EntropyCell> cells;
  std::vector<RateSlice> slices;
  Estimate h_top;  // density at the smallest eps
  EntropyFlags flags;
};

HTopResult estimate_h_top(const std::vector<OrbitEnsemble>& ensembles, const std::vector<double>& eps_list,
                          const std::vector<int>& l_list, const std::vector<int>& n_list, CoverMethod method,
                          int threads = 1);

struct HMuResult {
  std::vector<EntropyCell> cells;
  std::vector<RateSlice> slices;
  Estimate h_mu;
  EntropyFlags flags;
};

/// h_mu from label tensors: tensors[e][r] for eps_list[e] and realization r.
/// Positions of each tensor are the integer offsets -l_max/2 .. l_max/2 - 1.
HMuResult estimate_h_mu_from_labels(const std::vector<std::vector<SymbolTensor>>& tensors,
                                    const std::vector<double>& eps_list, const std::vector<int>& l_list,
                                    const std::vector<int>& n_list, double tau, int l_max);

HMuResult estimate_h_mu(const std::vector<OrbitEnsemble>& ensembles, const std::vector<double>& eps_list,
                        const std::vector<int>& l_list, const std::vector<int>& n_list,
                        const std::vector<double>& centers);

struct EpsEntropyResult {
  std::vector<EntropyCell> cells;
  std::vector<double> eps;
  std::vector<int> L;
  std::vector<std::vector<double>> log_m_mean;  // [eps][L] realization mean of log M
  std::vector<std::vector<double>> log_m_se;
  std::vector<Estimate> h_eps;                  // per eps: slope of log M in L^d
  std::vector<Estimate> d_up_per_L;             // slope of log M / L^d in log(1/eps)
  Estimate d_up;                                // slope of h_eps in log(1/eps), smallest decade
  EntropyFlags flags;
};

EpsEntropyResult estimate_eps_entropy(const std::vector<EnsembleSnapshot>& snapshots,
                                      const std::vector<double>& eps_list, const std::vector<int>& l_list,
                                      CoverMethod method, Point center = {0.0, 0.0});

struct DivergenceFit {
  double gamma_hat = 0.0;  // max(gamma_raw, 0)
  double gamma_raw = 0.0;
  double gamma_se = 0.0;
  double c_hat = 0.0;      // smallest C with C e^{gamma_hat t} eps over all fitted points
  double residual = 0.0;
  std::size_t used = 0;
  std::vector<std::size_t> excluded;
  std::vector<std::string> warnings;
  std::vector<double> pair_slopes;
};

/// Pooled least-squares fit of log(sup_diff / eps) against t over the
/// pre-saturation part of every series.
DivergenceFit fit_divergence(const std::vector<DivergenceSeries>& series, double eps, double saturation = 0.1);

/// Whether C e^{gamma t} eps bounds every pre-saturation point of `series`.
double envelope_violation(const std::vector<DivergenceSeries>& series, const DivergenceFit& fit, double eps,
                          double saturation = 0.1);

}  // namespace sgl
