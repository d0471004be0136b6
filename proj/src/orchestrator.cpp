#include "sgl/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "sgl/checkpoint.hpp"
#include "sgl/errors.hpp"
#include "sgl/kernels.hpp"
#include "sgl/norms.hpp"
#include "sgl/parallel.hpp"
#include "sgl/rng.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPerturbTag = 0x7065727475726221ULL;
constexpr std::uint64_t kOutsideTag = 0x6F75747369646521ULL;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Estimate& e) {
  return {{"value", num_json(e.value)}, {"raw", num_json(e.raw)}, {"se", num_json(e.se)},
          {"residual", num_json(e.residual)}, {"degenerate", e.degenerate}};
}

json to_json(const EntropyFlags& f) {
  return {{"monotone_in_eps", f.monotone_in_eps}, {"h_eps_monotone", f.h_eps_monotone},
          {"undersampled", f.undersampled}, {"messages", f.messages}};
}

json to_json(const std::vector<RateSlice>& slices) {
  json out = json::array();
  for (const auto& s : slices) {
    json rates = json::array();
    for (const auto& r : s.rate) rates.push_back(to_json(r));
    out.push_back({{"eps", s.eps}, {"L", s.L}, {"rate", rates}, {"density", to_json(s.density)}});
  }
  return out;
}

json to_json(const DivergenceFit& f) {
  return {{"gamma_hat", num_json(f.gamma_hat)}, {"gamma_raw", num_json(f.gamma_raw)},
          {"gamma_se", num_json(f.gamma_se)},   {"c_hat", num_json(f.c_hat)},
          {"residual", num_json(f.residual)},   {"used", f.used},
          {"excluded", f.excluded},             {"warnings", f.warnings},
          {"pair_slopes", f.pair_slopes}};
}

json to_json(const HomogeneityResult& h) {
  json z = json::array();
  for (double v : h.z) z.push_back(num_json(v));
  return {{"score", num_json(h.score)}, {"shifts", h.shifts}, {"mean", h.mean},
          {"mean_diff", h.mean_diff},   {"stderr_diff", h.stderr_diff}, {"z", z}};
}

std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::runtime: return "runtime";
    case ErrorKind::io: return "io";
  }
  return "runtime";
}

// Collects artifacts of one command and writes the manifest last.
class Run {
public:
  Run(const RunConfig& config, const CommandOptions& options, std::string command)
      : config_(config), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
    dir_ = options.out.empty() ? config.output_dir : options.out;
    base_seed_ = options.seed ? *options.seed : config.base_seed;
    threads_ = std::max(1, options.threads);
    write("config.toml", config.source);
  }

  std::uint64_t base_seed() const { return base_seed_; }
  int threads() const { return threads_; }

  void write(const std::string& rel, const std::string& contents) {
    const auto t0 = std::chrono::steady_clock::now();
    write_atomic(dir_ / rel, contents);
    artifacts_.push_back(rel);
    write_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  void write_json(const std::string& rel, const json& j) { write(rel, j.dump(2) + "\n"); }
  void timing(const std::string& stage, double seconds) { timings_[stage] = seconds; }
  void seeds(std::vector<std::uint64_t> s) { seeds_ = std::move(s); }

  CommandResult finish(const json& summary, int exit_code = 0) {
    write_json("summary.json", summary);
    json m;
    m["command"] = command_;
    m["code_version"] = SGL_VERSION;
    m["config_file"] = "config.toml";
    m["config_hash"] = "fnv1a64:" + fnv1a_hex(config_.source);
    m["base_seed"] = base_seed_;
    m["realization_seeds"] = seeds_;
    m["threads"] = threads_;
    m["artifacts"] = artifacts_;
    timings_["io"] = write_seconds_;
    timings_["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["timings_seconds"] = timings_;
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
    return {exit_code, summary.dump(2), artifacts_};
  }

private:
  const RunConfig& config_;
  std::string command_;
  fs::path dir_;
  std::uint64_t base_seed_ = 0;
  int threads_ = 1;
  std::vector<std::string> artifacts_;
  std::vector<std::uint64_t> seeds_;
  json timings_ = json::object();
  double write_seconds_ = 0.0;
  std::chrono::steady_clock::time_point start_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig with_seed(const RunConfig& config, const CommandOptions& options) {
  RunConfig c = config;
  if (options.seed) c.base_seed = *options.seed;
  return c;
}

Field evolve_to(const Field& u0, const NoiseRealization& realization, const ModelParams& params,
                const SolverConfig& config, double t) {
  if (t <= 0.0) return u0;
  SolverConfig cfg = config;
  cfg.record_norms = false;
  cfg.observables.clear();
  Stepper s(u0.grid, params, cfg, realization);
  s.reset(u0);
  const std::int64_t steps = realization.step_of(t);
  for (std::int64_t k = 0; k < steps; ++k) s.advance();
  return s.state();
}

std::string slug(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::uint64_t seed_of(const RunConfig& config, std::size_t index) {
  return realization_seed(config.base_seed, index);
}

NoiseRealization realization_for(const RunConfig& config, std::uint64_t seed) {
  return sample_realization(config.forcing, seed, config.solver.dt, config.drift, config.diffusion);
}

Field initial_field(const RunConfig& config, std::size_t index) {
  const InitialSpec& in = config.initial;
  if (in.kind == "constant") return Field::constant(config.grid, in.value);
  if (in.kind == "checkpoint") {
    Field f = read_checkpoint(in.path);
    if (!(f.grid == config.grid)) throw ValidationError("grid_mismatch", "checkpoint grid differs from the config grid");
    return f;
  }
  const Spectral sp(config.grid);
  return random_band_limited(config.grid, realization_seed(in.seed, index), in.k_max, in.sup, sp);
}

std::vector<DivergenceSeries> run_pairs(const RunConfig& config, double eps, int threads) {
  const PairSpec& ps = config.pair;
  const Grid& g = config.grid;
  SolverConfig cfg = config.solver;
  cfg.t_end = ps.t_end;
  cfg.record_norms = false;
  cfg.observables.clear();
  cfg.checkpoint_times.clear();
  // The 2/3 truncation is a global projection that couples distant points;
  // windowed divergence needs the pointwise nonlinearity.
  cfg.dealias = false;
  cfg.validate();
  const PairWindow win{ps.side, ps.shrink, eps, {0.0, 0.0}};
  Window(ps.side, win.center).validate_in(g);
  std::vector<DivergenceSeries> out(static_cast<std::size_t>(ps.pairs));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const std::uint64_t seed = seed_of(config, i);
    const NoiseRealization omega = realization_for(config, seed);
    const Field u0 = evolve_to(initial_field(config, i), omega, config.model, config.solver, ps.t_burn);
    const Spectral sp(g);
    const Field zeta = random_band_limited(g, seed ^ kPerturbTag, config.initial.k_max, 1.0, sp);
    const Field far = random_band_limited(g, seed ^ kOutsideTag, config.initial.k_max, std::max(sup_norm(u0), 1e-3), sp);
    Field v0 = u0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Point x = g.point(j);
      double r = 0.0;
      for (int k = 0; k < g.d; ++k) r = std::max(r, std::abs(x[k] - win.center[k]) - 0.5 * ps.side);
      const double a = chi(1.0 + std::max(r, 0.0) / 5.0);
      v0[j] = a * (u0[j] + eps * zeta[j]) + (1.0 - a) * far[j];
    }
    out[i] = pair_evolve(u0, v0, omega.shifted(ps.t_burn), config.model, cfg, win).divergence;
  });
  return out;
}

MeasureRun run_measure(const RunConfig& config, int threads) {
  const MeasureSpec& ms = config.measure;
  const int d = config.grid.d;
  SolverConfig cfg = config.solver;
  cfg.checkpoint_times.clear();
  const std::size_t n_obs = cfg.observables.size();
  // Shifted copies of the homogeneity observable.
  std::size_t hom = n_obs;
  if (n_obs > 0) {
    hom = 0;
    if (!ms.homogeneity_observable.empty()) {
      hom = n_obs;
      for (std::size_t i = 0; i < n_obs; ++i)
        if (cfg.observables[i].name == ms.homogeneity_observable) hom = i;
      if (hom == n_obs) throw ValidationError("config_invalid", "unknown homogeneity observable");
    }
    for (double s : ms.shifts) {
      Observable o = cfg.observables[hom].shifted(s, d);
      o.name += "@" + slug(s);
      cfg.observables.push_back(o);
    }
  }
  cfg.validate();
  const std::size_t R = static_cast<std::size_t>(config.ensemble_size);

  auto ensemble = [&](bool pinned) {
    std::vector<TrajectoryRecord> recs(R);
    parallel_for(R, threads, [&](std::size_t r) {
      const std::uint64_t seed = seed_of(config, r);
      NoiseRealization omega = realization_for(config, seed);
      if (pinned) omega = pinned_realization(config.forcing, seed, cfg.dt, std::vector<double>(omega.y0.size(), 0.0));
      recs[r] = evolve(initial_field(config, r), omega, config.model, cfg);
    });
    return recs;
  };

  auto homogeneity = [&](const std::vector<TrajectoryRecord>& recs) {
    HomogeneityInput in;
    in.grid = config.grid;
    in.window = Window{cfg.observables[hom].side, cfg.observables[hom].center};
    in.shifts = ms.shifts;
    in.times = recs.front().times;
    in.burn_in = ms.burn_in;
    for (std::size_t s = 0; s < ms.shifts.size(); ++s) {
      std::vector<std::vector<double>> per;
      for (const auto& rec : recs) per.push_back(rec.observable_values[n_obs + s]);
      in.series.push_back(std::move(per));
    }
    return homogeneity_test(in);
  };

  const auto recs = ensemble(false);
  MeasureRun out;
  out.times = recs.front().times;
  auto add = [&](const std::string& name, auto pick) {
    std::vector<std::vector<double>> vals;
    for (const auto& rec : recs) vals.push_back(pick(rec));
    out.names.push_back(name);
    out.cesaro.push_back(cesaro_mean_ensemble(out.times, vals, ms.burn_in, name));
    std::vector<double> avg(out.times.size(), 0.0);
    for (const auto& v : vals)
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += v[k] / static_cast<double>(vals.size());
    out.stationarity.push_back(stationarity_test(out.times, avg, ms.burn_in, ms.stationarity_windows));
  };
  for (std::size_t i = 0; i < cfg.observables.size(); ++i)
    add(cfg.observables[i].name, [i](const TrajectoryRecord& r) { return r.observable_values[i]; });
  if (cfg.record_norms) {
    add("l2loc_0", [](const TrajectoryRecord& r) { return r.l2loc_0; });
    add("h0ul", [](const TrajectoryRecord& r) { return r.h0ul; });
    add("h1ul", [](const TrajectoryRecord& r) { return r.h1ul; });
    add("h2ul", [](const TrajectoryRecord& r) { return r.h2ul; });
    std::vector<std::vector<double>> hm;
    for (const auto& rec : recs) hm.push_back(ms.tightness_m == 0 ? rec.h0ul : ms.tightness_m == 1 ? rec.h1ul : rec.h2ul);
    out.tightness = tightness(out.times, hm, ms.burn_in, ms.tightness_radii, ms.tightness_m);
  }
  if (n_obs > 0 && !ms.shifts.empty() && R >= 2) {
    out.homogeneity = homogeneity(recs);
    if (ms.pinned_control) out.control = homogeneity(ensemble(true));
  }
  return out;
}

EntropyRun run_entropy(const RunConfig& config, int threads) {
  const EntropySpec& es = config.entropy;
  SolverConfig cfg = config.solver;
  cfg.record_norms = false;
  cfg.observables.clear();
  cfg.checkpoint_times.clear();
  const int n_max = *std::max_element(es.n_list.begin(), es.n_list.end());
  std::vector<EnsembleSnapshot> snaps;
  std::vector<OrbitEnsemble> orbits;
  for (int r = 0; r < config.ensemble_size; ++r) {
    const std::uint64_t seed = seed_of(config, static_cast<std::size_t>(r));
    const NoiseRealization omega = realization_for(config, seed);
    snaps.push_back(attractor_snapshot(config.grid, omega, config.model, cfg, es.samples, es.t_burn, es.init_radius,
                                       realization_seed(config.initial.seed, static_cast<std::size_t>(r)), threads));
    orbits.push_back(build_orbits(snaps.back(), omega.shifted(es.t_burn), config.model, cfg, es.tau, n_max - 1, threads));
  }
  EntropyRun out;
  out.h_top = estimate_h_top(orbits, es.eps_list, es.l_list, es.n_list, es.method, threads);
  if (es.h_mu && config.grid.d == 1) out.h_mu = estimate_h_mu(orbits, es.eps_list, es.l_list, es.n_list, es.centers);
  out.eps_entropy = estimate_eps_entropy(snaps, es.eps_list, es.l_list, es.method);
  const double eps = config.pair.eps_list.front();
  out.divergence = fit_divergence(run_pairs(config, eps, threads), eps, config.pair.saturation);
  return out;
}

CartwrightErrors cartwright_errors(const KernelSpec& spec) {
  CartwrightErrors out;
  if (spec.cartwright_n_max.empty()) return out;
  out.n_max = spec.cartwright_n_max;
  const double ps = spec.kernel.p_star;
  const int smallest = *std::min_element(out.n_max.begin(), out.n_max.end());
  const CartwrightGrid g0{ps, smallest};
  const double lim = 0.999 * (g0.half_span() - g0.safe_margin());
  constexpr int kPoints = 201;
  constexpr int kTerms = 8;
  std::vector<double> xs;
  for (int i = 0; i < kPoints; ++i) xs.push_back(-lim + 2.0 * lim * (i + 0.37) / kPoints);
  out.points = xs.size() * static_cast<std::size_t>(spec.cartwright_functions);
  out.max_error.assign(out.n_max.size(), 0.0);
  SplitMix rng(spec.cartwright_seed);
  for (int f = 0; f < spec.cartwright_functions; ++f) {
    std::vector<double> freq;
    std::vector<cplx> coef;
    for (int j = 0; j < kTerms; ++j) {
      freq.push_back(rng.uniform(-2.0 * ps, 2.0 * ps));
      coef.push_back(cplx(rng.normal(), rng.normal()) / std::sqrt(2.0 * kTerms));
    }
    auto fn = [&](double x) {
      cplx s = 0.0;
      for (int j = 0; j < kTerms; ++j) s += coef[j] * std::polar(1.0, freq[j] * x);
      return s;
    };
    for (std::size_t i = 0; i < out.n_max.size(); ++i) {
      const CartwrightGrid g{ps, out.n_max[i]};
      const auto samples = g.sample(fn);
      for (double x : xs)
        out.max_error[i] = std::max(out.max_error[i], std::abs(cartwright_interpolate(samples, g, x) - fn(x)));
    }
  }
  return out;
}

CommandResult cmd_check(const RunConfig& config, const CommandOptions& options) {
  config.validate();
  Run run(config, options, "check");
  const HypothesisReport h = check_hypothesis(config.model);
  json s;
  s["hypothesis"] = {{"condition1_lhs", h.condition1_lhs}, {"condition1_rhs", h.condition1_rhs},
                     {"condition1_ok", h.condition1_ok},   {"beta_bound", h.beta_bound},
                     {"condition2_ok", h.condition2_ok},   {"theta", h.theta},
                     {"satisfied", h.satisfied},           {"boundary_warning", h.boundary_warning}};
  s["feasible_epsilon_max"] = feasible_epsilon_max(config.model);
  if (h.satisfied) {
    const DissipativityMargin m = margin(config.model, config.epsilon);
    s["margin"] = {{"epsilon", m.epsilon},           {"lambda", m.lambda},
                   {"eta", m.eta},                   {"margin_value", m.margin_value},
                   {"bracket_value", m.bracket_value}};
  } else {
    s["margin"] = nullptr;
  }
  return run.finish(s, h.satisfied ? 0 : 1);
}

CommandResult cmd_simulate(const RunConfig& base, const CommandOptions& options) {
  base.validate();
  const RunConfig config = with_seed(base, options);
  Run run(config, options, "simulate");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t R = static_cast<std::size_t>(config.ensemble_size);
  std::vector<TrajectoryRecord> recs(R);
  std::vector<std::uint64_t> seeds(R);
  for (std::size_t r = 0; r < R; ++r) seeds[r] = seed_of(config, r);
  parallel_for(R, run.threads(), [&](std::size_t r) {
    recs[r] = evolve(initial_field(config, r), realization_for(config, seeds[r]), config.model, config.solver);
  });
  run.timing("simulate", seconds_since(t0));
  run.seeds(seeds);
  json reals = json::array();
  for (std::size_t r = 0; r < R; ++r) {
    const auto& rec = recs[r];
    char tag[32];
    std::snprintf(tag, sizeof tag, "r%03zu", r);
    std::ostringstream csv;
    csv << "t,sup_norm,l2loc_0,h1ul,h2ul\n";
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
      csv << num(rec.times[k]) << ',' << num(rec.sup_norm[k]);
      if (config.solver.record_norms)
        csv << ',' << num(rec.l2loc_0[k]) << ',' << num(rec.h1ul[k]) << ',' << num(rec.h2ul[k]) << '\n';
      else
        csv << ",nan,nan,nan\n";
    }
    run.write(std::string("trajectory_") + tag + ".csv", csv.str());
    if (!rec.observable_names.empty()) {
      std::ostringstream os;
      os << "t";
      for (const auto& n : rec.observable_names) os << ',' << n;
      os << '\n';
      for (std::size_t k = 0; k < rec.times.size(); ++k) {
        os << num(rec.times[k]);
        for (const auto& v : rec.observable_values) os << ',' << num(v[k]);
        os << '\n';
      }
      run.write(std::string("observables_") + tag + ".csv", os.str());
    }
    json ckpts = json::array();
    for (const auto& [t, f] : rec.checkpoints) {
      const std::string name = std::string("checkpoints/") + tag + "_t" + slug(t) + ".sgl";
      run.write(name, encode_field(f));
      ckpts.push_back({{"t", t}, {"path", name}});
    }
    json stops = json::array();
    for (const auto& ev : rec.stopping)
      stops.push_back({{"radius", ev.radius}, {"time", ev.time ? json(*ev.time) : json(nullptr)}});
    reals.push_back({{"index", r},
                     {"seed", seeds[r]},
                     {"final_sup_norm", sup_norm(rec.final_state)},
                     {"stopping", stops},
                     {"checkpoints", ckpts}});
  }
  return run.finish({{"command", "simulate"}, {"realizations", reals}});
}

CommandResult cmd_pair(const RunConfig& base, const CommandOptions& options) {
  base.validate();
  const RunConfig config = with_seed(base, options);
  Run run(config, options, "pair");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config.pair.pairs; ++i) seeds.push_back(seed_of(config, static_cast<std::size_t>(i)));
  run.seeds(seeds);
  json fits = json::array();
  for (double eps : config.pair.eps_list) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto series = run_pairs(config, eps, run.threads());
    run.timing("pairs_eps_" + slug(eps), seconds_since(t0));
    std::ostringstream csv;
    csv << "pair,t,window_side,sup_diff\n";
    for (std::size_t i = 0; i < series.size(); ++i)
      for (std::size_t k = 0; k < series[i].times.size(); ++k)
        csv << i << ',' << num(series[i].times[k]) << ',' << num(series[i].window_side[k]) << ','
            << num(series[i].sup_diff[k]) << '\n';
    const std::string name = "divergence_eps" + slug(eps) + ".csv";
    run.write(name, csv.str());
    const DivergenceFit fit = fit_divergence(series, eps, config.pair.saturation);
    json j = to_json(fit);
    j["eps"] = eps;
    j["series_csv"] = name;
    j["envelope_violation"] = fit.used ? num_json(envelope_violation(series, fit, eps, config.pair.saturation))
                                       : json(nullptr);
    fits.push_back(j);
  }
  json s = {{"command", "pair"}, {"saturation", config.pair.saturation}, {"fits", fits}};
  run.write_json("divergence_fit.json", s);
  return run.finish(s);
}

CommandResult cmd_measure(const RunConfig& base, const CommandOptions& options) {
  base.validate();
  const RunConfig config = with_seed(base, options);
  Run run(config, options, "measure");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config.ensemble_size; ++i) seeds.push_back(seed_of(config, static_cast<std::size_t>(i)));
  run.seeds(seeds);
  const auto t0 = std::chrono::steady_clock::now();
  const MeasureRun m = run_measure(config, run.threads());
  run.timing("measure", seconds_since(t0));

  std::ostringstream ces;
  ces << "observable,t,running_mean,stderr\n";
  for (const auto& c : m.cesaro)
    for (std::size_t k = 0; k < c.times.size(); ++k)
      ces << c.observable << ',' << num(c.times[k]) << ',' << num(c.running_mean[k]) << ','
          << num(c.standard_error[k]) << '\n';
  run.write("measure.csv", ces.str());

  std::ostringstream st;
  st << "observable,score\n";
  for (std::size_t i = 0; i < m.names.size(); ++i) st << m.names[i] << ',' << num(m.stationarity[i]) << '\n';
  run.write("stationarity.csv", st.str());

  json s = {{"command", "measure"}, {"burn_in", config.measure.burn_in}};
  if (!m.homogeneity.shifts.empty()) {
    std::ostringstream hs;
    hs << "ensemble,shift,mean,mean_diff,stderr_diff,z\n";
    auto rows = [&](const char* label, const HomogeneityResult& h) {
      for (std::size_t i = 0; i < h.shifts.size(); ++i)
        hs << label << ',' << num(h.shifts[i]) << ',' << num(h.mean[i]) << ',' << num(h.mean_diff[i]) << ','
           << num(h.stderr_diff[i]) << ',' << num(h.z[i]) << '\n';
    };
    rows("haar", m.homogeneity);
    if (m.control) rows("pinned", *m.control);
    run.write("homogeneity.csv", hs.str());
    s["homogeneity"] = to_json(m.homogeneity);
    s["pinned_control"] = m.control ? to_json(*m.control) : json(nullptr);
  }
  if (!m.tightness.radius_grid.empty()) {
    std::ostringstream ts;
    ts << "R,occupancy\n";
    for (std::size_t i = 0; i < m.tightness.radius_grid.size(); ++i)
      ts << num(m.tightness.radius_grid[i]) << ',' << num(m.tightness.occupancy[i]) << '\n';
    run.write("tightness.csv", ts.str());
    s["tightness"] = {{"m", m.tightness.m}, {"R", m.tightness.radius_grid}, {"occupancy", m.tightness.occupancy}};
  }
  json stat = json::object();
  json finals = json::object();
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    stat[m.names[i]] = num_json(m.stationarity[i]);
    if (!m.cesaro[i].times.empty())
      finals[m.names[i]] = {{"mean", m.cesaro[i].running_mean.back()}, {"stderr", m.cesaro[i].standard_error.back()}};
  }
  s["stationarity"] = stat;
  s["cesaro_final"] = finals;
  return run.finish(s);
}

CommandResult cmd_entropy(const RunConfig& base, const CommandOptions& options) {
  base.validate();
  const RunConfig config = with_seed(base, options);
  Run run(config, options, "entropy");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < std::max(config.ensemble_size, config.pair.pairs); ++i)
    seeds.push_back(seed_of(config, static_cast<std::size_t>(i)));
  run.seeds(seeds);
  const auto t0 = std::chrono::steady_clock::now();
  const EntropyRun e = run_entropy(config, run.threads());
  run.timing("entropy", seconds_since(t0));

  std::ostringstream csv;
  csv << "eps,L,n,tau,realization,logN,logM,h_block\n";
  auto rows = [&](const std::vector<EntropyCell>& cells) {
    for (const auto& c : cells)
      csv << num(c.eps) << ',' << c.L << ',' << c.n << ',' << num(c.tau) << ',' << c.realization << ','
          << num(c.log_n) << ',' << num(c.log_m) << ',' << num(c.h_block) << '\n';
  };
  rows(e.h_top.cells);
  if (e.h_mu) rows(e.h_mu->cells);
  rows(e.eps_entropy.cells);
  run.write("entropy.csv", csv.str());

  json h_eps = json::array();
  for (std::size_t i = 0; i < e.eps_entropy.eps.size(); ++i)
    h_eps.push_back({{"eps", e.eps_entropy.eps[i]}, {"estimate", to_json(e.eps_entropy.h_eps[i])}});
  json d_per = json::array();
  for (std::size_t i = 0; i < e.eps_entropy.L.size(); ++i)
    d_per.push_back({{"L", e.eps_entropy.L[i]}, {"estimate", to_json(e.eps_entropy.d_up_per_L[i])}});
  json s;
  s["command"] = "entropy";
  s["h_top_hat"] = to_json(e.h_top.h_top);
  s["h_mu_hat"] = e.h_mu ? to_json(e.h_mu->h_mu) : json(nullptr);
  s["d_up_hat"] = to_json(e.eps_entropy.d_up);
  s["gamma_hat"] = to_json(Estimate{e.divergence.gamma_hat, e.divergence.gamma_raw, e.divergence.gamma_se,
                                    e.divergence.residual, e.divergence.used == 0});
  s["divergence_fit"] = to_json(e.divergence);
  s["h_top_slices"] = to_json(e.h_top.slices);
  s["h_mu_slices"] = e.h_mu ? to_json(e.h_mu->slices) : json(nullptr);
  s["h_eps"] = h_eps;
  s["d_up_per_L"] = d_per;
  s["flags"] = {{"h_top", to_json(e.h_top.flags)},
                {"h_mu", e.h_mu ? to_json(e.h_mu->flags) : json(nullptr)},
                {"eps_entropy", to_json(e.eps_entropy.flags)}};
  s["scan_order"] = "n, then L, then eps";
  s["method"] = to_string(config.entropy.method);
  return run.finish(s);
}

CommandResult cmd_kernels(const RunConfig& config, const CommandOptions& options) {
  config.kernels.kernel.validate();
  Run run(config, options, "kernels");
  const KernelSpec& ks = config.kernels;
  const KernelConfig& kc = ks.kernel;
  auto t0 = std::chrono::steady_clock::now();
  for (KernelPart part : {KernelPart::minus, KernelPart::plus}) {
    std::ostringstream csv;
    csv << "t,x,re,im\n";
    const int nx = static_cast<int>(std::llround(kc.x_max / kc.x_step));
    for (double t : ks.table_t)
      for (int i = -nx; i <= nx; ++i) {
        const double x = i * kc.x_step;
        const cplx k = kernel_quadrature(part, t, x, kc);
        csv << num(t) << ',' << num(x) << ',' << num(k.real()) << ',' << num(k.imag()) << '\n';
      }
    run.write("kernel_" + to_string(part) + ".csv", csv.str());
  }
  run.timing("tables", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  json decay = json::array();
  for (KernelPart part : {KernelPart::minus, KernelPart::plus})
    for (int n : ks.decay_orders) {
      const KernelDecayFit f = verify_kernel_decay(kc, n, ks.t_list, part);
      decay.push_back({{"part", to_string(part)}, {"n", n}, {"c_n", f.c_n}, {"max_violation", f.max_violation},
                       {"fit_points", f.fit_points}, {"verify_points", f.verify_points}});
    }
  std::vector<double> t_verify;
  const double t_lo = *std::min_element(ks.envelope_t_fit.begin(), ks.envelope_t_fit.end());
  const double t_hi = *std::max_element(ks.envelope_t_fit.begin(), ks.envelope_t_fit.end());
  for (int i = 0;; ++i) {
    const double t = t_lo + i * ks.envelope_t_step;
    if (t > t_hi + 1e-12) break;
    t_verify.push_back(t);
  }
  const EnvelopeFit env = fit_plus_envelope(kc, ks.envelope_t_fit, t_verify);
  run.timing("decay", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  const CartwrightErrors cw = cartwright_errors(ks);
  run.timing("cartwright", seconds_since(t0));
  std::ostringstream cwcsv;
  cwcsv << "n_max,max_error\n";
  for (std::size_t i = 0; i < cw.n_max.size(); ++i) cwcsv << cw.n_max[i] << ',' << num(cw.max_error[i]) << '\n';
  run.write("cartwright.csv", cwcsv.str());

  json s;
  s["command"] = "kernels";
  s["p_star"] = kc.p_star;
  s["alpha"] = kc.alpha;
  s["decay"] = decay;
  s["plus_envelope"] = {{"constant", env.constant}, {"max_violation", env.max_violation},
                        {"t_fit", ks.envelope_t_fit}, {"t_verify", env.t_verify}, {"sup_values", env.sup_values}};
  s["cartwright"] = {{"n_max", cw.n_max}, {"max_error", cw.max_error}, {"points", cw.points}};
  run.write_json("kernel_decay.json", s);
  return run.finish(s);
}

int resolve_threads(std::optional<int> flag) {
  if (flag && *flag > 0) return *flag;
  if (const char* env = std::getenv("SGL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 1;
}

int run_command(const std::string& command, const fs::path& config_path, const CommandOptions& options,
                std::ostream& out, std::ostream& err) {
  auto report = [&](const std::string& kind, const std::string& code, const std::string& message) {
    json e = {{"error", {{"kind", kind}, {"code", code}, {"message", message}, {"command", command}}}};
    err << e.dump() << std::endl;
  };
  try {
    const RunConfig config = load_config(config_path);
    CommandResult r;
    if (command == "check")
      r = cmd_check(config, options);
    else if (command == "simulate")
      r = cmd_simulate(config, options);
    else if (command == "pair")
      r = cmd_pair(config, options);
    else if (command == "measure")
      r = cmd_measure(config, options);
    else if (command == "entropy")
      r = cmd_entropy(config, options);
    else if (command == "kernels")
      r = cmd_kernels(config, options);
    else
      throw ValidationError("unknown_command", "unknown command '" + command + "'");
    out << r.summary << std::endl;
    if (r.exit_code != 0) report("validation", "hypothesis_unsatisfied", "the dissipativity hypothesis fails");
    return r.exit_code;
  } catch (const BlowUpError& e) {
    json j = {{"error",
               {{"kind", "runtime"}, {"code", e.code()}, {"message", e.what()}, {"time", e.time()}, {"command", command}}}};
    err << j.dump() << std::endl;
    return exit_code(e.kind());
  } catch (const Error& e) {
    report(to_string(e.kind()), e.code(), e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    report("io", "io_failed", e.what());
    return 3;
  } catch (const std::exception& e) {
    report("runtime", "internal", e.what());
    return 2;
  }
}

}  // namespace sgl
