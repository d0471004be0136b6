#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgl/entropy.hpp"
#include "sgl/field.hpp"
#include "sgl/forcing.hpp"
#include "sgl/kernels.hpp"
#include "sgl/model.hpp"
#include "sgl/observables.hpp"
#include "sgl/solver.hpp"

namespace sgl {

/// How each realization's initial field is produced.
struct InitialSpec {
  std::string kind = "random";  // random | constant | checkpoint
  cplx value{1.0, 0.0};         // constant
  double sup = 1.0;             // random: sup norm
  double k_max = 2.0;           // random: spectral cutoff
  std::uint64_t seed = 7;       // random: combined with the realization index
  std::string path;             // checkpoint file
};

struct PairSpec {
  int pairs = 20;
  std::vector<double> eps_list{1e-6};
  double side = 50.0;
  double shrink = 2.0;
  double t_burn = 10.0;    // evolution of the shared u0 before the pair starts
  double t_end = 20.0;     // pair duration
  double saturation = 0.1;
};

struct MeasureSpec {
  double burn_in = 50.0;
  int stationarity_windows = 4;
  std::vector<double> shifts{0.0, 10.0, 20.0};
  std::string homogeneity_observable;  // empty: the first observable
  bool pinned_control = false;         // repeat homogeneity with y0 fixed
  std::vector<double> tightness_radii{1.0, 2.0, 4.0, 8.0, 16.0};
  int tightness_m = 1;
};

struct EntropySpec {
  std::vector<double> eps_list{0.1, 0.05, 0.025};
  std::vector<int> l_list{8, 16, 32};
  std::vector<int> n_list{2, 4, 8};
  double tau = 1.0;
  double t_burn = 20.0;
  std::size_t samples = 64;   // snapshot size per realization
  double init_radius = 1.0;
  CoverMethod method = CoverMethod::greedy;
  std::vector<double> centers{0.0};  // window centres for symbolic coding
  bool h_mu = true;
};

struct KernelSpec {
  KernelConfig kernel;
  std::vector<int> decay_orders{1, 2};
  std::vector<double> t_list{0.5, 1.0, 1.5, 2.0};
  std::vector<double> envelope_t_fit{0.5, 1.0, 1.5, 2.0};
  double envelope_t_step = 0.05;
  std::vector<double> table_t{0.5, 1.0, 2.0};
  std::vector<int> cartwright_n_max{512, 1024, 2048, 4096};
  int cartwright_functions = 20;
  std::uint64_t cartwright_seed = 11;
};

struct RunConfig {
  ModelParams model;
  Grid grid;
  ForcingProfile forcing;
  DriftMode drift = DriftMode::frozen;
  double diffusion = 0.0;
  SolverConfig solver;
  InitialSpec initial;
  int ensemble_size = 1;
  std::uint64_t base_seed = 1;
  std::filesystem::path output_dir = "out";
  PairSpec pair;
  MeasureSpec measure;
  EntropySpec entropy;
  KernelSpec kernels;
  double epsilon = 0.5;  // margin evaluation point for `check`
  std::string source;    // the TOML text this config was parsed from

  /// Checks every module precondition that can be checked before running.
  void validate() const;
};

/// Parses TOML text. Throws ValidationError("config_invalid") on syntax or
/// type errors and for unknown keys.
RunConfig parse_config(const std::string& toml_text);
/// Reads and parses a file; IoError if it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a hash, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace sgl
