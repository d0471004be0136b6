#include "sgl/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "sgl/checkpoint.hpp"
#include "sgl/errors.hpp"

#define TOML_HEADER_ONLY 1
#include <toml.hpp>

namespace sgl {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError("config_invalid", msg); }

// Typed access to one TOML table that remembers which keys were read, so
// misspelled keys are reported instead of silently ignored.
class Section {
public:
  Section(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  bool present() const { return t_ != nullptr; }

  double number(const char* key, double def) {
    const toml::node* n = get(key);
    if (!n) return def;
    if (auto v = n->value_exact<double>()) return *v;
    if (auto v = n->value_exact<std::int64_t>()) return static_cast<double>(*v);
    fail(where(key) + " must be a number");
  }
  std::int64_t integer(const char* key, std::int64_t def) {
    const toml::node* n = get(key);
    if (!n) return def;
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    fail(where(key) + " must be an integer");
  }
  bool boolean(const char* key, bool def) {
    const toml::node* n = get(key);
    if (!n) return def;
    if (auto v = n->value_exact<bool>()) return *v;
    fail(where(key) + " must be a boolean");
  }
  std::string string(const char* key, const std::string& def) {
    const toml::node* n = get(key);
    if (!n) return def;
    if (auto v = n->value_exact<std::string>()) return *v;
    fail(where(key) + " must be a string");
  }
  std::vector<double> numbers(const char* key, const std::vector<double>& def) {
    const toml::node* n = get(key);
    if (!n) return def;
    const toml::array* a = n->as_array();
    if (!a) fail(where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *a) {
      if (auto v = e.value_exact<double>())
        out.push_back(*v);
      else if (auto w = e.value_exact<std::int64_t>())
        out.push_back(static_cast<double>(*w));
      else
        fail(where(key) + " must be an array of numbers");
    }
    return out;
  }
  std::vector<int> integers(const char* key, const std::vector<int>& def) {
    const toml::node* n = get(key);
    if (!n) return def;
    const toml::array* a = n->as_array();
    if (!a) fail(where(key) + " must be an array of integers");
    std::vector<int> out;
    for (const auto& e : *a) {
      auto v = e.value_exact<std::int64_t>();
      if (!v) fail(where(key) + " must be an array of integers");
      out.push_back(static_cast<int>(*v));
    }
    return out;
  }
  const toml::node* raw(const char* key) { return get(key); }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_)
      if (!used_.count(std::string(k.str()))) fail("unknown key '" + where(std::string(k.str()).c_str()) + "'");
  }

private:
  const toml::node* get(const char* key) {
    if (!t_) return nullptr;
    used_.insert(key);
    return t_->get(key);
  }
  std::string where(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

  const toml::table* t_;
  std::string name_;
  std::set<std::string> used_;
};

Section section(const toml::table& root, const char* name, std::set<std::string>& seen) {
  seen.insert(name);
  const toml::node* n = root.get(name);
  if (!n) return Section(nullptr, name);
  const toml::table* t = n->as_table();
  if (!t) fail(std::string("[") + name + "] must be a table");
  return Section(t, name);
}

Point point2(Section& s, const char* key, Point def) {
  const auto v = s.numbers(key, {def[0], def[1]});
  if (v.empty() || v.size() > 2) fail(std::string(key) + " must have one or two components");
  return {v[0], v.size() > 1 ? v[1] : 0.0};
}

std::uint64_t seed_value(Section& s, const char* key, std::uint64_t def) {
  const std::int64_t v = s.integer(key, static_cast<std::int64_t>(def));
  if (v < 0) fail(std::string(key) + " must be non-negative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    fail(os.str());
  }
  RunConfig c;
  c.source = text;
  std::set<std::string> seen;

  auto model = section(root, "model", seen);
  c.model.alpha = model.number("alpha", c.model.alpha);
  c.model.beta = model.number("beta", c.model.beta);
  c.model.q = model.number("q", c.model.q);
  c.model.d = static_cast<int>(model.integer("d", c.model.d));
  c.model.big_r = model.number("R", c.model.big_r);
  c.model.big_m = model.number("M", c.model.big_m);
  c.epsilon = model.number("epsilon", c.epsilon);
  model.finish();

  auto grid = section(root, "grid", seen);
  c.grid.d = c.model.d;
  c.grid.box_length = grid.number("box_length", c.grid.box_length);
  c.grid.points_per_dim = static_cast<int>(grid.integer("points", c.grid.points_per_dim));
  grid.finish();

  auto forcing = section(root, "forcing", seen);
  const std::string drift = forcing.string("drift", "frozen");
  if (drift == "frozen")
    c.drift = DriftMode::frozen;
  else if (drift == "torus_brownian")
    c.drift = DriftMode::torus_brownian;
  else
    fail("forcing.drift must be 'frozen' or 'torus_brownian'");
  c.diffusion = forcing.number("diffusion", 0.0);
  if (const toml::node* modes = forcing.raw("modes")) {
    const toml::array* arr = modes->as_array();
    if (!arr) fail("forcing.modes must be an array of tables");
    for (const auto& m : *arr) {
      const toml::table* mt = m.as_table();
      if (!mt) fail("forcing.modes must be an array of tables");
      Section s(mt, "forcing.modes");
      ForcingMode md;
      md.wave_vector = point2(s, "wave_vector", {0.0, 0.0});
      md.amplitude = s.number("amplitude", 0.0);
      md.base_phase = s.number("phase", 0.0);
      md.group = static_cast<int>(s.integer("group", -1));
      md.harmonic = static_cast<int>(s.integer("harmonic", 1));
      s.finish();
      c.forcing.modes.push_back(md);
    }
  }
  forcing.finish();

  auto solver = section(root, "solver", seen);
  c.solver.dt = solver.number("dt", c.solver.dt);
  c.solver.t_end = solver.number("t_end", c.solver.t_end);
  c.solver.scheme = scheme_from_string(solver.string("scheme", to_string(c.solver.scheme)));
  c.solver.record_stride = static_cast<int>(solver.integer("record_stride", c.solver.record_stride));
  c.solver.use_cutoff = solver.boolean("use_cutoff", c.solver.use_cutoff);
  c.solver.cutoff_smoothing = solver.number("cutoff_smoothing", c.solver.cutoff_smoothing);
  c.solver.dealias = solver.boolean("dealias", c.solver.dealias);
  c.solver.record_norms = solver.boolean("record_norms", c.solver.record_norms);
  c.solver.norm_delta = solver.number("norm_delta", c.solver.norm_delta);
  c.solver.lattice_spacing = solver.number("lattice_spacing", c.solver.lattice_spacing);
  c.solver.stopping_radii = solver.numbers("stopping_radii", {});
  c.solver.checkpoint_times = solver.numbers("checkpoint_times", {});
  solver.finish();

  auto init = section(root, "initial", seen);
  c.initial.kind = init.string("kind", c.initial.kind);
  {
    const auto v = init.numbers("value", {1.0, 0.0});
    if (v.size() != 2) fail("initial.value must be [re, im]");
    c.initial.value = {v[0], v[1]};
  }
  c.initial.sup = init.number("sup", c.initial.sup);
  c.initial.k_max = init.number("k_max", c.initial.k_max);
  c.initial.seed = seed_value(init, "seed", c.initial.seed);
  c.initial.path = init.string("path", "");
  init.finish();

  if (const toml::node* obs = root.get("observables")) {
    seen.insert("observables");
    const toml::array* arr = obs->as_array();
    if (!arr) fail("observables must be an array of tables");
    for (const auto& o : *arr) {
      const toml::table* ot = o.as_table();
      if (!ot) fail("observables must be an array of tables");
      Section s(ot, "observables");
      Observable ob;
      ob.kind = observable_kind_from_string(s.string("kind", "sup_norm_window"));
      ob.name = s.string("name", to_string(ob.kind));
      ob.delta = s.number("delta", ob.delta);
      ob.center = point2(s, "center", ob.center);
      ob.side = s.number("side", ob.side);
      ob.m = static_cast<int>(s.integer("m", ob.m));
      ob.p = s.number("p", ob.p);
      ob.lag = s.number("lag", ob.lag);
      s.finish();
      c.solver.observables.push_back(ob);
    }
  }

  auto ens = section(root, "ensemble", seen);
  c.ensemble_size = static_cast<int>(ens.integer("size", c.ensemble_size));
  c.base_seed = seed_value(ens, "base_seed", c.base_seed);
  ens.finish();

  auto out = section(root, "output", seen);
  c.output_dir = out.string("dir", c.output_dir.string());
  out.finish();

  auto pair = section(root, "pair", seen);
  c.pair.pairs = static_cast<int>(pair.integer("pairs", c.pair.pairs));
  c.pair.eps_list = pair.numbers("eps_list", c.pair.eps_list);
  c.pair.side = pair.number("side", c.pair.side);
  c.pair.shrink = pair.number("shrink", c.pair.shrink);
  c.pair.t_burn = pair.number("t_burn", c.pair.t_burn);
  c.pair.t_end = pair.number("t_end", c.pair.t_end);
  c.pair.saturation = pair.number("saturation", c.pair.saturation);
  pair.finish();

  auto meas = section(root, "measure", seen);
  c.measure.burn_in = meas.number("burn_in", c.measure.burn_in);
  c.measure.stationarity_windows = static_cast<int>(meas.integer("stationarity_windows", c.measure.stationarity_windows));
  c.measure.shifts = meas.numbers("shifts", c.measure.shifts);
  c.measure.homogeneity_observable = meas.string("homogeneity_observable", "");
  c.measure.pinned_control = meas.boolean("pinned_control", c.measure.pinned_control);
  c.measure.tightness_radii = meas.numbers("tightness_radii", c.measure.tightness_radii);
  c.measure.tightness_m = static_cast<int>(meas.integer("tightness_m", c.measure.tightness_m));
  meas.finish();

  auto ent = section(root, "entropy", seen);
  c.entropy.eps_list = ent.numbers("eps_list", c.entropy.eps_list);
  c.entropy.l_list = ent.integers("L_list", c.entropy.l_list);
  c.entropy.n_list = ent.integers("n_list", c.entropy.n_list);
  c.entropy.tau = ent.number("tau", c.entropy.tau);
  c.entropy.t_burn = ent.number("t_burn", c.entropy.t_burn);
  {
    const std::int64_t s = ent.integer("samples", static_cast<std::int64_t>(c.entropy.samples));
    if (s < 1) fail("entropy.samples must be positive");
    c.entropy.samples = static_cast<std::size_t>(s);
  }
  c.entropy.init_radius = ent.number("init_radius", c.entropy.init_radius);
  c.entropy.method = cover_method_from_string(ent.string("method", to_string(c.entropy.method)));
  c.entropy.centers = ent.numbers("centers", c.entropy.centers);
  c.entropy.h_mu = ent.boolean("h_mu", c.entropy.h_mu);
  ent.finish();

  auto ker = section(root, "kernels", seen);
  c.kernels.kernel.p_star = ker.number("p_star", c.kernels.kernel.p_star);
  c.kernels.kernel.alpha = ker.number("alpha", c.model.alpha);
  c.kernels.kernel.quadrature_points = static_cast<int>(ker.integer("quadrature_points", c.kernels.kernel.quadrature_points));
  c.kernels.kernel.rel_tol = ker.number("rel_tol", c.kernels.kernel.rel_tol);
  c.kernels.kernel.x_max = ker.number("x_max", c.kernels.kernel.x_max);
  c.kernels.kernel.x_step = ker.number("x_step", c.kernels.kernel.x_step);
  c.kernels.decay_orders = ker.integers("decay_orders", c.kernels.decay_orders);
  c.kernels.t_list = ker.numbers("t_list", c.kernels.t_list);
  c.kernels.envelope_t_fit = ker.numbers("envelope_t_fit", c.kernels.envelope_t_fit);
  c.kernels.envelope_t_step = ker.number("envelope_t_step", c.kernels.envelope_t_step);
  c.kernels.table_t = ker.numbers("table_t", c.kernels.table_t);
  c.kernels.cartwright_n_max = ker.integers("cartwright_n_max", c.kernels.cartwright_n_max);
  c.kernels.cartwright_functions = static_cast<int>(ker.integer("cartwright_functions", c.kernels.cartwright_functions));
  c.kernels.cartwright_seed = seed_value(ker, "cartwright_seed", c.kernels.cartwright_seed);
  ker.finish();

  for (const auto& [k, v] : root)
    if (!seen.count(std::string(k.str()))) fail("unknown section '" + std::string(k.str()) + "'");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

void RunConfig::validate() const {
  check_hypothesis(model);  // rejects q <= 1/2 and d outside {1, 2}
  model.validate();
  grid.validate();
  if (grid.d != model.d) throw ValidationError("config_invalid", "grid and model dimension differ");
  if (!forcing.modes.empty()) forcing.validate(grid.d);
  if (diffusion < 0.0) throw ValidationError("config_invalid", "forcing.diffusion must be non-negative");
  solver.validate();
  if (ensemble_size < 1) throw ValidationError("config_invalid", "ensemble.size must be positive");
  if (initial.kind != "random" && initial.kind != "constant" && initial.kind != "checkpoint")
    throw ValidationError("config_invalid", "initial.kind must be random, constant or checkpoint");
  if (initial.kind == "checkpoint" && initial.path.empty())
    throw ValidationError("config_invalid", "initial.path is required for checkpoint initial data");
  for (const auto& o : solver.observables) {
    if (o.kind == ObservableKind::sup_norm_window || o.kind == ObservableKind::amplitude_moment ||
        o.kind == ObservableKind::spatial_correlation)
      Window{o.side, o.center}.validate_in(grid);
  }
  if (pair.pairs < 1) throw ValidationError("config_invalid", "pair.pairs must be positive");
  for (double e : pair.eps_list)
    if (!(e > 0.0 && e < 1.0)) throw ValidationError("eps_invalid", "pair eps must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("config_invalid", "model.epsilon must lie in (0, 1]");
  for (double e : entropy.eps_list)
    if (!(e > 0.0)) throw ValidationError("eps_invalid", "entropy eps must be positive");
  for (int l : entropy.l_list)
    if (l < 1) throw ValidationError("config_invalid", "entropy L values must be positive");
  for (int n : entropy.n_list)
    if (n < 1) throw ValidationError("config_invalid", "entropy n values must be positive");
  if (!(entropy.tau > 0.0)) throw ValidationError("config_invalid", "entropy.tau must be positive");
  if (measure.stationarity_windows < 2) throw ValidationError("config_invalid", "measure.stationarity_windows must be >= 2");
  kernels.kernel.validate();
}

}  // namespace sgl
