#pragma once

#include <string>
#include <vector>

#include "sgl/field.hpp"

namespace sgl {

struct CesaroSeries {
  std::string observable;
  std::vector<double> times;
  std::vector<double> running_mean;
  std::vector<double> standard_error;
};

/// Running time averages of one recorded series after discarding t < burn_in.
/// Standard errors are batch means over the averaged prefix. Samples are
/// assumed equally spaced in time.
CesaroSeries cesaro_mean(const std::vector<double>& times, const std::vector<double>& values, double burn_in,
                         const std::string& name = "");

/// Ensemble version: the running mean averages the per-realization running
/// means; the standard error is their spread over sqrt(#realizations).
CesaroSeries cesaro_mean_ensemble(const std::vector<double>& times, const std::vector<std::vector<double>>& values,
                                  double burn_in, const std::string& name = "");

/// Max over window pairs of |m_i - m_j| / sqrt(se_i^2 + se_j^2), windows
/// taken after burn-in with batch-means errors.
double stationarity_test(const std::vector<double>& times, const std::vector<double>& values, double burn_in,
                         int windows);

struct HomogeneityInput {
  Grid grid;
  Window window;                 // unshifted observation window
  std::vector<double> shifts;    // lattice shifts applied to the window centre
  std::vector<double> times;
  double burn_in = 0.0;
  std::vector<std::vector<std::vector<double>>> series;  // [shift][realization][time]
};

struct HomogeneityResult {
  double score = 0.0;  // max standardized discrepancy against shift 0
  std::vector<double> shifts;
  std::vector<double> mean;       // ensemble Cesaro mean per shift
  std::vector<double> mean_diff;  // paired mean difference to shift 0
  std::vector<double> stderr_diff;
  std::vector<double> z;
};

/// Compares Cesaro means at shifted windows using realization-paired
/// differences against the unshifted window. Shifted windows must respect
/// the box margin.
HomogeneityResult homogeneity_test(const HomogeneityInput& input);

struct TightnessReport {
  int m = 1;
  std::vector<double> radius_grid;
  std::vector<double> occupancy;
};

/// Fraction of post-burn-in (time x realization) samples with hm_ul <= R.
TightnessReport tightness(const std::vector<double>& times, const std::vector<std::vector<double>>& hm_ul,
                          double burn_in, const std::vector<double>& radius_grid, int m);

}  // namespace sgl
