#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/norms.hpp"

namespace sgl {

enum class ObservableKind { sup_norm_window, l2loc, hm_ul, amplitude_moment, spatial_correlation };

/// Scalar functional of a field used as a test function for the
/// time-averaged law.
struct Observable {
  std::string name;
  ObservableKind kind = ObservableKind::sup_norm_window;
  double delta = 0.2;        // l2loc, hm_ul
  Point center{0.0, 0.0};    // window centre or weight centre
  double side = 10.0;        // window side for sup / moment / correlation
  int m = 1;                 // hm_ul order
  double p = 2.0;            // amplitude_moment exponent
  double lag = 1.0;          // spatial_correlation lag along the first axis

  /// Copy with the window or weight centre moved by `shift` along every axis.
  Observable shifted(double shift, int d) const;
};

ObservableKind observable_kind_from_string(const std::string& s);
std::string to_string(ObservableKind k);

/// Evaluates observables on one grid, caching norm evaluators and weights.
class ObservableEvaluator {
public:
  explicit ObservableEvaluator(const Grid& g) : grid_(g) {}
  double operator()(const Observable& obs, const Field& f);

private:
  const NormEvaluator& evaluator(double delta);
  Grid grid_;
  std::map<double, std::unique_ptr<NormEvaluator>> norms_;
};

}  // namespace sgl
