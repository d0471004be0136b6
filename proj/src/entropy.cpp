#include "sgl/entropy.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/parallel.hpp"
#include "sgl/rng.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

namespace {

std::int64_t steps_per(double tau, double dt) {
  const double k = tau / dt;
  const double r = std::round(k);
  if (r < 1.0 || std::abs(k - r) > 1e-9 * k) throw AlignmentError("tau must be a positive multiple of dt");
  return static_cast<std::int64_t>(r);
}

double exact_cover(const PointCloud& pts, double eps) {
  const std::size_t n = pts.size();
  if (n == 0) return 0;
  std::vector<std::uint32_t> close(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i == j || sup_distance(pts.row(i), pts.row(j), pts.dim) <= eps) close[i] |= 1u << j;
  const std::uint32_t full = (1u << n) - 1;
  std::vector<char> clique(full + 1, 0);
  clique[0] = 1;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int low = std::countr_zero(mask);
    const std::uint32_t rest = mask & (mask - 1);
    clique[mask] = clique[rest] && ((close[low] & rest) == rest);
  }
  std::vector<int> dp(full + 1, 1 << 20);
  dp[0] = 0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    const std::uint32_t others = mask ^ low;
    // subsets s of mask containing the lowest bit
    for (std::uint32_t sub = others;; sub = (sub - 1) & others) {
      const std::uint32_t s = sub | low;
      if (clique[s]) dp[mask] = std::min(dp[mask], dp[mask ^ s] + 1);
      if (sub == 0) break;
    }
  }
  return dp[full];
}

// Covering radii after k = 1, 2, ... farthest-point centres, down to `stop`.
std::vector<double> farthest_point_radii(const PointCloud& pts, double stop) {
  const std::size_t n = pts.size();
  std::vector<double> radii;
  if (n == 0) return radii;
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = sup_distance(pts.row(0), pts.row(i), pts.dim);
  for (;;) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (dist[i] > dist[far]) far = i;
    radii.push_back(dist[far]);
    if (dist[far] <= stop || radii.size() >= n) break;
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], sup_distance(pts.row(far), pts.row(i), pts.dim));
  }
  return radii;
}

std::size_t count_from_radii(const std::vector<double>& radii, double eps) {
  for (std::size_t k = 0; k < radii.size(); ++k)
    if (radii[k] <= 0.5 * eps) return k + 1;
  return radii.size();
}

std::vector<std::size_t> counts_for(const PointCloud& pts, const std::vector<double>& eps, CoverMethod m) {
  std::vector<std::size_t> out;
  if (m == CoverMethod::exact) {
    for (double e : eps) out.push_back(cover_count(pts, e, m).count);
    return out;
  }
  return greedy_cover_counts(pts, eps);
}

double mean_of(const std::vector<double>& v) { return mean(std::span<const double>(v)); }

double se_of(const std::vector<double>& v) {
  return v.size() > 1 ? std::sqrt(variance(std::span<const double>(v)) / static_cast<double>(v.size())) : 0.0;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ (v + kGolden + (h << 6) + (h >> 2))); }

double pow_d(int L, int d) { return d == 1 ? L : static_cast<double>(L) * L; }

Estimate clamp(Estimate e) {
  e.raw = e.value;
  e.value = std::max(0.0, e.value);
  return e;
}

}  // namespace

void PointCloud::push(const std::vector<cplx>& p) {
  if (dim == 0 && data.empty()) dim = p.size();
  if (p.size() != dim) throw ValidationError("point_dim_mismatch", "point has the wrong dimension");
  data.insert(data.end(), p.begin(), p.end());
}

double sup_distance(const cplx* a, const cplx* b, std::size_t dim) {
  double m = 0.0;
  for (std::size_t i = 0; i < dim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CoverMethod cover_method_from_string(const std::string& s) {
  if (s == "greedy") return CoverMethod::greedy;
  if (s == "exact") return CoverMethod::exact;
  throw ValidationError("cover_method_unknown", "unknown cover method '" + s + "'");
}

std::string to_string(CoverMethod m) { return m == CoverMethod::exact ? "exact" : "greedy"; }

CoverReport cover_count(const PointCloud& points, double eps, CoverMethod method) {
  if (!(eps > 0.0)) throw ValidationError("eps_invalid", "eps must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  CoverReport r;
  r.eps = eps;
  r.method = method;
  if (method == CoverMethod::exact) {
    if (points.size() > kExactCoverLimit) {
      std::ostringstream os;
      os << "exact covers are limited to " << kExactCoverLimit << " points, got " << points.size();
      throw ValidationError("cover_too_large", os.str());
    }
    r.count = static_cast<std::size_t>(exact_cover(points, eps));
  } else {
    r.count = count_from_radii(farthest_point_radii(points, 0.5 * eps), eps);
  }
  r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<std::size_t> greedy_cover_counts(const PointCloud& points, const std::vector<double>& eps_list) {
  if (eps_list.empty()) return {};
  const double smallest = *std::min_element(eps_list.begin(), eps_list.end());
  if (!(smallest > 0.0)) throw ValidationError("eps_invalid", "eps must be positive");
  const auto radii = farthest_point_radii(points, 0.5 * smallest);
  std::vector<std::size_t> out;
  for (double e : eps_list) out.push_back(count_from_radii(radii, e));
  return out;
}

EnsembleSnapshot attractor_snapshot(const Grid& grid, const NoiseRealization& realization, const ModelParams& params,
                                    const SolverConfig& config, std::size_t count, double t_final, double radius,
                                    std::uint64_t init_seed, int threads) {
  SolverConfig cfg = config;
  cfg.record_norms = false;
  cfg.observables.clear();
  const std::int64_t steps = realization.step_of(t_final);
  EnsembleSnapshot snap;
  snap.realization_id = realization.seed;
  snap.time = t_final;
  snap.fields.resize(count);
  const Spectral sp(grid);
  std::vector<Field> init(count);
  for (std::size_t i = 0; i < count; ++i)
    init[i] = random_band_limited(grid, realization_seed(init_seed, i), 2.0, radius, sp);
  parallel_for(count, threads, [&](std::size_t i) {
    Stepper s(grid, params, cfg, realization);
    s.reset(init[i]);
    for (std::int64_t k = 0; k < steps; ++k) s.advance();
    snap.fields[i] = s.state();
  });
  return snap;
}

void BowenSpec::validate() const {
  if (n < 1) throw ValidationError("bowen_invalid", "n must be >= 1");
  if (!(tau > 0.0)) throw ValidationError("bowen_invalid", "tau must be positive");
  if (!(eps > 0.0)) throw ValidationError("bowen_invalid", "eps must be positive");
}

double bowen_distance(const Field& u, const Field& v, const BowenSpec& spec, const NoiseRealization& realization,
                      const ModelParams& params, const SolverConfig& config) {
  spec.validate();
  if (!(u.grid == v.grid)) throw ValidationError("grid_mismatch", "fields are on different grids");
  spec.window.validate_in(u.grid);
  const std::int64_t per = steps_per(spec.tau, config.dt);
  SolverConfig cfg = config;
  cfg.record_norms = false;
  Stepper su(u.grid, params, cfg, realization);
  Stepper sv(v.grid, params, cfg, realization);
  su.reset(u);
  sv.reset(v);
  double d = 0.0;
  for (int k = 0; k < spec.n; ++k) {
    if (k > 0) {
      for (std::int64_t j = 0; j < per; ++j) {
        su.advance();
        sv.advance();
      }
    }
    d = std::max(d, sup_norm(su.state() - sv.state(), spec.window));
  }
  return d;
}

OrbitEnsemble build_orbits(const EnsembleSnapshot& snapshot, const NoiseRealization& realization,
                           const ModelParams& params, const SolverConfig& config, double tau, int n_max,
                           int threads) {
  if (snapshot.fields.empty()) throw ValidationError("snapshot_empty", "snapshot has no fields");
  if (n_max < 0) throw ValidationError("bowen_invalid", "n_max must be non-negative");
  const std::int64_t per = steps_per(tau, config.dt);
  SolverConfig cfg = config;
  cfg.record_norms = false;
  cfg.observables.clear();
  OrbitEnsemble out;
  out.grid = snapshot.fields.front().grid;
  out.tau = tau;
  out.n_max = n_max;
  out.realization_id = snapshot.realization_id;
  out.orbits.resize(snapshot.fields.size());
  parallel_for(snapshot.fields.size(), threads, [&](std::size_t i) {
    Stepper s(out.grid, params, cfg, realization);
    s.reset(snapshot.fields[i]);
    auto& orbit = out.orbits[i];
    orbit.push_back(s.state());
    for (int k = 1; k <= n_max; ++k) {
      for (std::int64_t j = 0; j < per; ++j) s.advance();
      orbit.push_back(s.state());
    }
  });
  return out;
}

PointCloud bowen_cloud(const OrbitEnsemble& orbits, const Window& window, int n) {
  if (n < 1 || n > orbits.n_max + 1) throw ValidationError("bowen_invalid", "depth exceeds the stored orbit");
  window.validate_in(orbits.grid);
  const auto idx = window.indices(orbits.grid);
  PointCloud pc;
  pc.dim = idx.size() * static_cast<std::size_t>(n);
  for (const auto& orbit : orbits.orbits) {
    for (int k = 0; k < n; ++k)
      for (std::size_t i : idx) pc.data.push_back(orbit[static_cast<std::size_t>(k)][i]);
  }
  return pc;
}

PointCloud window_cloud(const std::vector<Field>& fields, const Window& window) {
  PointCloud pc;
  if (fields.empty()) return pc;
  window.validate_in(fields.front().grid);
  const auto idx = window.indices(fields.front().grid);
  pc.dim = idx.size();
  for (const auto& f : fields)
    for (std::size_t i : idx) pc.data.push_back(f[i]);
  return pc;
}

double partition_entropy(const std::vector<double>& probs) {
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p)) throw ValidationError("negative_probability", "probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("probability_sum", "probabilities must sum to 1");
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double conditional_entropy(const std::vector<std::vector<double>>& joint) {
  std::vector<double> flat;
  std::size_t cols = 0;
  for (const auto& row : joint) cols = std::max(cols, row.size());
  std::vector<double> marginal(cols, 0.0);
  for (const auto& row : joint) {
    for (std::size_t v = 0; v < row.size(); ++v) {
      flat.push_back(row[v]);
      marginal[v] += row[v];
    }
  }
  const double h_joint = partition_entropy(flat);
  double h_v = 0.0;
  for (double p : marginal)
    if (p > 0.0) h_v -= p * std::log(p);
  return std::max(0.0, h_joint - h_v);
}

double block_entropy(const SymbolTensor& t, int n_use, int pos_begin, int pos_count, bool* undersampled) {
  if (n_use < 1 || n_use > t.n || pos_begin < 0 || pos_count < 1 || pos_begin + pos_count > t.positions)
    throw ValidationError("block_invalid", "block exceeds the label tensor");
  std::vector<std::uint64_t> words(t.samples);
  for (std::size_t s = 0; s < t.samples; ++s) {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (int k = 0; k < n_use; ++k)
      for (int x = pos_begin; x < pos_begin + pos_count; ++x) h = mix(h, t.at(s, k, x));
    words[s] = h;
  }
  std::sort(words.begin(), words.end());
  double ent = 0.0;
  bool once = false;
  const double total = static_cast<double>(t.samples);
  for (std::size_t i = 0; i < words.size();) {
    std::size_t j = i;
    while (j < words.size() && words[j] == words[i]) ++j;
    const double p = static_cast<double>(j - i) / total;
    ent -= p * std::log(p);
    if (j - i == 1) once = true;
    i = j;
  }
  if (undersampled) *undersampled = once;
  return ent;
}

SymbolTensor label_orbits(const OrbitEnsemble& orbits, double eps, int l_max, int n_max,
                          const std::vector<double>& centers) {
  if (orbits.grid.d != 1) throw ValidationError("dimension_unsupported", "symbolic coding is one-dimensional");
  if (!(eps > 0.0)) throw ValidationError("eps_invalid", "eps must be positive");
  if (n_max < 1 || n_max > orbits.n_max + 1) throw ValidationError("bowen_invalid", "n_max exceeds the stored orbit");
  if (centers.empty()) throw ValidationError("centers_empty", "need at least one window centre");
  const Grid& g = orbits.grid;
  for (double c : centers) Window{static_cast<double>(l_max), {c, 0.0}}.validate_in(g);
  // Grid indices of the unit cube around every integer position of every centre.
  std::vector<std::vector<std::size_t>> cubes;
  for (double c : centers) {
    for (int j = 0; j < l_max; ++j) {
      const double x = c + j - l_max / 2 + 0.5;
      cubes.push_back(Window{1.0, {x, 0.0}}.indices(g));
    }
  }
  SymbolTensor t;
  t.n = n_max;
  t.positions = l_max;
  t.samples = orbits.orbits.size() * centers.size();
  t.labels.resize(t.samples * static_cast<std::size_t>(n_max) * static_cast<std::size_t>(l_max));
  const double box = eps / std::sqrt(2.0);
  std::size_t s = 0;
  for (const auto& orbit : orbits.orbits) {
    for (std::size_t ci = 0; ci < centers.size(); ++ci, ++s) {
      for (int k = 0; k < n_max; ++k) {
        const Field& f = orbit[static_cast<std::size_t>(k)];
        for (int j = 0; j < l_max; ++j) {
          std::uint64_t h = 0x13198A2E03707344ULL;
          for (std::size_t i : cubes[ci * static_cast<std::size_t>(l_max) + static_cast<std::size_t>(j)]) {
            h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(f[i].real() / box))));
            h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(f[i].imag() / box))));
          }
          t.labels[(s * static_cast<std::size_t>(n_max) + k) * l_max + j] = h;
        }
      }
    }
  }
  return t;
}

Estimate propagated_slope(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& y_se) {
  Estimate e;
  const LinearFit f = least_squares(x, y);
  e.degenerate = f.degenerate;
  if (f.degenerate) return e;
  const double mx = mean_of(x);
  double sxx = 0.0;
  for (double v : x) sxx += (v - mx) * (v - mx);
  double prop = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = (x[i] - mx) / sxx;
    const double s = i < y_se.size() ? y_se[i] : 0.0;
    prop += w * w * s * s;
  }
  e.value = e.raw = f.slope;
  e.se = std::sqrt(f.slope_se * f.slope_se + prop);
  e.residual = f.residual;
  return e;
}

HTopResult estimate_h_top(const std::vector<OrbitEnsemble>& ensembles, const std::vector<double>& eps_list,
                          const std::vector<int>& l_list, const std::vector<int>& n_list, CoverMethod method,
                          int threads) {
  if (ensembles.empty()) throw ValidationError("ensemble_empty", "no orbit ensembles");
  if (eps_list.size() < 2 || l_list.size() < 2 || n_list.size() < 2)
    throw ValidationError("grid_too_small", "entropy scans need at least two values per axis");
  const int d = ensembles.front().grid.d;
  const double tau = ensembles.front().tau;
  const std::size_t R = ensembles.size(), NL = l_list.size(), NN = n_list.size(), NE = eps_list.size();
  // counts[r][l][n][e]
  std::vector<std::vector<std::size_t>> counts(R * NL * NN);
  parallel_for(R * NL * NN, threads, [&](std::size_t task) {
    const std::size_t r = task / (NL * NN);
    const std::size_t l = (task / NN) % NL;
    const std::size_t n = task % NN;
    const PointCloud pc = bowen_cloud(ensembles[r], Window{static_cast<double>(l_list[l]), {0.0, 0.0}}, n_list[n]);
    counts[task] = counts_for(pc, eps_list, method);
  });
  HTopResult out;
  auto logn = [&](std::size_t r, std::size_t l, std::size_t n, std::size_t e) {
    return std::log(static_cast<double>(counts[(r * NL + l) * NN + n][e]));
  };
  for (std::size_t e = 0; e < NE; ++e)
    for (std::size_t l = 0; l < NL; ++l)
      for (std::size_t n = 0; n < NN; ++n)
        for (std::size_t r = 0; r < R; ++r) {
          EntropyCell c;
          c.eps = eps_list[e];
          c.L = l_list[l];
          c.n = n_list[n];
          c.tau = tau;
          c.realization = r;
          c.log_n = logn(r, l, n, e);
          c.log_m = std::numeric_limits<double>::quiet_NaN();
          c.h_block = std::numeric_limits<double>::quiet_NaN();
          out.cells.push_back(c);
        }
  // Exact monotonicity of the raw counts in eps.
  std::vector<std::size_t> order(NE);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return eps_list[a] > eps_list[b]; });
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t l = 0; l < NL; ++l)
      for (std::size_t n = 0; n < NN; ++n)
        for (std::size_t i = 1; i < NE; ++i)
          if (logn(r, l, n, order[i]) < logn(r, l, n, order[i - 1])) out.flags.monotone_in_eps = false;
  if (!out.flags.monotone_in_eps) out.flags.messages.push_back("log N decreased as eps decreased");

  for (std::size_t e = 0; e < NE; ++e) {
    RateSlice slice;
    slice.eps = eps_list[e];
    std::vector<double> lx, ly, lse;
    for (std::size_t l = 0; l < NL; ++l) {
      std::vector<double> x, y, se;
      for (std::size_t n = 0; n < NN; ++n) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < R; ++r) vals.push_back(logn(r, l, n, e));
        x.push_back(n_list[n] * tau);
        y.push_back(mean_of(vals));
        se.push_back(se_of(vals));
      }
      Estimate rate = propagated_slope(x, y, se);
      if (rate.degenerate) out.flags.messages.push_back("degenerate rate fit");
      slice.L.push_back(l_list[l]);
      lx.push_back(pow_d(l_list[l], d));
      ly.push_back(rate.value);
      lse.push_back(rate.se);
      slice.rate.push_back(clamp(rate));
    }
    slice.density = clamp(propagated_slope(lx, ly, lse));
    if (slice.density.degenerate) out.flags.messages.push_back("degenerate density fit");
    out.slices.push_back(slice);
  }
  const std::size_t smallest = order.back();
  out.h_top = out.slices[smallest].density;
  return out;
}

HMuResult estimate_h_mu_from_labels(const std::vector<std::vector<SymbolTensor>>& tensors,
                                    const std::vector<double>& eps_list, const std::vector<int>& l_list,
                                    const std::vector<int>& n_list, double tau, int l_max) {
  if (tensors.size() != eps_list.size()) throw ValidationError("h_mu_input", "one tensor set per eps is required");
  if (eps_list.size() < 1 || l_list.size() < 2 || n_list.size() < 2)
    throw ValidationError("grid_too_small", "entropy scans need at least two L and n values");
  HMuResult out;
  const std::size_t NE = eps_list.size();
  for (std::size_t e = 0; e < NE; ++e) {
    RateSlice slice;
    slice.eps = eps_list[e];
    std::vector<double> lx, ly, lse;
    for (int L : l_list) {
      if (L > l_max) throw ValidationError("h_mu_input", "window larger than the labelled region");
      std::vector<double> x, y, se;
      for (int n : n_list) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < tensors[e].size(); ++r) {
          bool once = false;
          const double h = block_entropy(tensors[e][r], n, (l_max - L) / 2, L, &once);
          if (once) out.flags.undersampled = true;
          vals.push_back(h);
          EntropyCell c;
          c.eps = eps_list[e];
          c.L = L;
          c.n = n;
          c.tau = tau;
          c.realization = r;
          c.log_n = std::numeric_limits<double>::quiet_NaN();
          c.log_m = std::numeric_limits<double>::quiet_NaN();
          c.h_block = h;
          out.cells.push_back(c);
        }
        x.push_back(n * tau);
        y.push_back(mean_of(vals));
        se.push_back(se_of(vals));
      }
      Estimate rate = propagated_slope(x, y, se);
      slice.L.push_back(L);
      lx.push_back(L);
      ly.push_back(rate.value);
      lse.push_back(rate.se);
      slice.rate.push_back(clamp(rate));
    }
    slice.density = clamp(propagated_slope(lx, ly, lse));
    out.slices.push_back(slice);
  }
  if (out.flags.undersampled) out.flags.messages.push_back("undersampled blocks: some words were seen once");
  const std::size_t smallest =
      static_cast<std::size_t>(std::min_element(eps_list.begin(), eps_list.end()) - eps_list.begin());
  out.h_mu = out.slices[smallest].density;
  return out;
}

HMuResult estimate_h_mu(const std::vector<OrbitEnsemble>& ensembles, const std::vector<double>& eps_list,
                        const std::vector<int>& l_list, const std::vector<int>& n_list,
                        const std::vector<double>& centers) {
  if (ensembles.empty()) throw ValidationError("ensemble_empty", "no orbit ensembles");
  const int l_max = *std::max_element(l_list.begin(), l_list.end());
  const int n_max = *std::max_element(n_list.begin(), n_list.end());
  std::vector<std::vector<SymbolTensor>> tensors(eps_list.size());
  for (std::size_t e = 0; e < eps_list.size(); ++e)
    for (const auto& ens : ensembles) tensors[e].push_back(label_orbits(ens, eps_list[e], l_max, n_max, centers));
  return estimate_h_mu_from_labels(tensors, eps_list, l_list, n_list, ensembles.front().tau, l_max);
}

EpsEntropyResult estimate_eps_entropy(const std::vector<EnsembleSnapshot>& snapshots,
                                      const std::vector<double>& eps_list, const std::vector<int>& l_list,
                                      CoverMethod method, Point center) {
  if (snapshots.empty() || snapshots.front().fields.empty())
    throw ValidationError("snapshot_empty", "no snapshot fields");
  if (l_list.size() < 2) throw ValidationError("grid_too_small", "need at least two window sizes");
  if (eps_list.empty()) throw ValidationError("grid_too_small", "need at least one eps");
  const int d = snapshots.front().fields.front().grid.d;
  const std::size_t R = snapshots.size(), NL = l_list.size(), NE = eps_list.size();
  EpsEntropyResult out;
  out.eps = eps_list;
  out.L = l_list;
  std::vector<std::vector<std::vector<double>>> logm(NE, std::vector<std::vector<double>>(NL));
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t l = 0; l < NL; ++l) {
      const PointCloud pc = window_cloud(snapshots[r].fields, Window{static_cast<double>(l_list[l]), center});
      const auto c = counts_for(pc, eps_list, method);
      for (std::size_t e = 0; e < NE; ++e) {
        const double v = std::log(static_cast<double>(c[e]));
        logm[e][l].push_back(v);
        EntropyCell cell;
        cell.eps = eps_list[e];
        cell.L = l_list[l];
        cell.n = 1;
        cell.tau = 0.0;
        cell.realization = r;
        cell.log_n = std::numeric_limits<double>::quiet_NaN();
        cell.log_m = v;
        cell.h_block = std::numeric_limits<double>::quiet_NaN();
        out.cells.push_back(cell);
      }
    }
  }
  out.log_m_mean.assign(NE, std::vector<double>(NL));
  out.log_m_se.assign(NE, std::vector<double>(NL));
  for (std::size_t e = 0; e < NE; ++e) {
    std::vector<double> x;
    for (std::size_t l = 0; l < NL; ++l) {
      out.log_m_mean[e][l] = mean_of(logm[e][l]);
      out.log_m_se[e][l] = se_of(logm[e][l]);
      x.push_back(pow_d(l_list[l], d));
    }
    out.h_eps.push_back(clamp(propagated_slope(x, out.log_m_mean[e], out.log_m_se[e])));
  }
  std::vector<std::size_t> order(NE);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return eps_list[a] > eps_list[b]; });
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t l = 0; l < NL; ++l)
      for (std::size_t i = 1; i < NE; ++i)
        if (logm[order[i]][l][r] < logm[order[i - 1]][l][r]) out.flags.monotone_in_eps = false;
  for (std::size_t i = 1; i < NE; ++i)
    if (out.h_eps[order[i]].value < out.h_eps[order[i - 1]].value) out.flags.h_eps_monotone = false;
  if (!out.flags.monotone_in_eps) out.flags.messages.push_back("log M decreased as eps decreased");
  if (!out.flags.h_eps_monotone) out.flags.messages.push_back("fitted H_eps is not non-increasing in eps");

  // Dimension fits over the smallest decade of eps.
  const double e_min = eps_list[order.back()];
  std::vector<std::size_t> decade;
  for (std::size_t e = 0; e < NE; ++e)
    if (eps_list[e] <= 10.0 * e_min * (1.0 + 1e-12)) decade.push_back(e);
  std::vector<double> lx;
  for (std::size_t e : decade) lx.push_back(std::log(1.0 / eps_list[e]));
  for (std::size_t l = 0; l < NL; ++l) {
    std::vector<double> y, se;
    const double vol = pow_d(l_list[l], d);
    for (std::size_t e : decade) {
      y.push_back(out.log_m_mean[e][l] / vol);
      se.push_back(out.log_m_se[e][l] / vol);
    }
    out.d_up_per_L.push_back(clamp(propagated_slope(lx, y, se)));
  }
  std::vector<double> hy, hse;
  for (std::size_t e : decade) {
    hy.push_back(out.h_eps[e].value);
    hse.push_back(out.h_eps[e].se);
  }
  out.d_up = clamp(propagated_slope(lx, hy, hse));
  return out;
}

DivergenceFit fit_divergence(const std::vector<DivergenceSeries>& series, double eps, double saturation) {
  if (!(eps > 0.0)) throw ValidationError("eps_invalid", "eps must be positive");
  DivergenceFit fit;
  std::vector<double> tx, ly;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::vector<double> x, y;
    bool all_zero = true;
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      if (s.sup_diff[k] >= saturation) break;
      if (s.sup_diff[k] > 0.0) {
        all_zero = false;
        x.push_back(s.times[k]);
        y.push_back(std::log(s.sup_diff[k] / eps));
      }
    }
    if (all_zero && !s.sup_diff.empty() && s.sup_diff.front() < saturation) {
      fit.excluded.push_back(i);
      fit.warnings.push_back("series " + std::to_string(i) + " is identically zero");
      continue;
    }
    if (x.size() < 2) {
      fit.excluded.push_back(i);
      fit.warnings.push_back("series " + std::to_string(i) + " saturates immediately");
      continue;
    }
    fit.pair_slopes.push_back(least_squares(x, y).slope);
    tx.insert(tx.end(), x.begin(), x.end());
    ly.insert(ly.end(), y.begin(), y.end());
    ++fit.used;
  }
  if (fit.used == 0) {
    fit.warnings.push_back("no usable series");
    return fit;
  }
  const LinearFit lf = least_squares(tx, ly);
  fit.gamma_raw = lf.slope;
  fit.gamma_se = lf.slope_se;
  fit.gamma_hat = std::max(0.0, lf.slope);
  fit.residual = lf.residual;
  double c = 0.0;
  for (std::size_t k = 0; k < tx.size(); ++k) c = std::max(c, std::exp(ly[k] - fit.gamma_hat * tx[k]));
  fit.c_hat = c;
  return fit;
}

double envelope_violation(const std::vector<DivergenceSeries>& series, const DivergenceFit& fit, double eps,
                          double saturation) {
  double worst = -1.0;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      if (s.sup_diff[k] >= saturation) break;
      const double bound = fit.c_hat * std::exp(fit.gamma_hat * s.times[k]) * eps;
      worst = std::max(worst, s.sup_diff[k] / bound - 1.0);
    }
  }
  return worst;
}

}  // namespace sgl
