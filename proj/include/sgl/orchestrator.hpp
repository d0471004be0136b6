#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sgl/config.hpp"
#include "sgl/entropy.hpp"
#include "sgl/measures.hpp"
#include "sgl/solver.hpp"

namespace sgl {

struct CommandOptions {
  std::filesystem::path out;            // empty: the config's output.dir
  std::optional<std::uint64_t> seed;    // overrides ensemble.base_seed
  int threads = 1;
};

struct CommandResult {
  int exit_code = 0;
  std::string summary;                  // JSON text
  std::vector<std::string> artifacts;   // paths relative to the output directory
};

// Building blocks shared by the commands.

/// Initial field of realization `index`.
Field initial_field(const RunConfig& config, std::size_t index);
NoiseRealization realization_for(const RunConfig& config, std::uint64_t seed);
std::uint64_t seed_of(const RunConfig& config, std::size_t index);

/// Divergence series of config.pair.pairs pairs at one eps. Pair i shares
/// realization i, starts from the burned-in initial field i, and its partner
/// is eps-close on the pair window but independent outside it.
std::vector<DivergenceSeries> run_pairs(const RunConfig& config, double eps, int threads = 1);

struct MeasureRun {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<CesaroSeries> cesaro;          // per observable, then l2loc_0 and hm_ul
  std::vector<double> stationarity;          // per entry of cesaro
  HomogeneityResult homogeneity;
  std::optional<HomogeneityResult> control;  // pinned-phase repetition
  TightnessReport tightness;
};

MeasureRun run_measure(const RunConfig& config, int threads = 1);

struct EntropyRun {
  HTopResult h_top;
  std::optional<HMuResult> h_mu;
  EpsEntropyResult eps_entropy;
  DivergenceFit divergence;
};

EntropyRun run_entropy(const RunConfig& config, int threads = 1);

struct CartwrightErrors {
  std::vector<int> n_max;
  std::vector<double> max_error;
  std::size_t points = 0;
};

/// Reconstruction error of random exponential sums with frequencies in
/// [-2 p*, 2 p*], evaluated on fixed points inside the safe interior of the
/// smallest n_max.
CartwrightErrors cartwright_errors(const KernelSpec& spec);

// Commands. Each writes its artifacts atomically under the output directory,
// a copy of the config (config.toml) and manifest.json.

CommandResult cmd_check(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_simulate(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_pair(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_measure(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_entropy(const RunConfig& config, const CommandOptions& options);
CommandResult cmd_kernels(const RunConfig& config, const CommandOptions& options);

/// Loads the config, dispatches `command` and reports errors as a JSON
/// object on `err`. Returns the process exit code.
int run_command(const std::string& command, const std::filesystem::path& config_path, const CommandOptions& options,
                std::ostream& out, std::ostream& err);

/// Thread count from --threads, else SGL_THREADS, else 1.
int resolve_threads(std::optional<int> flag);

}  // namespace sgl
