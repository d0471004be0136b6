#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sgl {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double residual = 0.0;  // root-mean-square residual
  std::size_t n = 0;
  bool degenerate = false;  // fewer than 2 distinct x values
};

/// Ordinary least squares y = intercept + slope x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
/// Unbiased sample variance (0 for fewer than two values).
double variance(std::span<const double> v);
/// Standard error of the mean from non-overlapping batch means; the number of
/// batches defaults to floor(sqrt(n)).
double batch_means_stderr(std::span<const double> v, int batches = 0);

}  // namespace sgl
