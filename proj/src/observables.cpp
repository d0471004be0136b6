#include "sgl/observables.hpp"

#include <cmath>

#include "sgl/errors.hpp"

namespace sgl {

Observable Observable::shifted(double shift, int d) const {
  Observable o = *this;
  for (int k = 0; k < d; ++k) o.center[k] += shift;
  return o;
}

ObservableKind observable_kind_from_string(const std::string& s) {
  if (s == "sup_norm_window") return ObservableKind::sup_norm_window;
  if (s == "l2loc") return ObservableKind::l2loc;
  if (s == "hm_ul") return ObservableKind::hm_ul;
  if (s == "amplitude_moment") return ObservableKind::amplitude_moment;
  if (s == "spatial_correlation") return ObservableKind::spatial_correlation;
  throw ValidationError("observable_unknown", "unknown observable kind '" + s + "'");
}

std::string to_string(ObservableKind k) {
  switch (k) {
    case ObservableKind::sup_norm_window: return "sup_norm_window";
    case ObservableKind::l2loc: return "l2loc";
    case ObservableKind::hm_ul: return "hm_ul";
    case ObservableKind::amplitude_moment: return "amplitude_moment";
    case ObservableKind::spatial_correlation: return "spatial_correlation";
  }
  return "unknown";
}

const NormEvaluator& ObservableEvaluator::evaluator(double delta) {
  auto& slot = norms_[delta];
  if (!slot) slot = std::make_unique<NormEvaluator>(grid_, delta);
  return *slot;
}

double ObservableEvaluator::operator()(const Observable& obs, const Field& f) {
  const Window win{obs.side, obs.center};
  switch (obs.kind) {
    case ObservableKind::sup_norm_window:
      return sup_norm(f, win);
    case ObservableKind::l2loc:
      return evaluator(obs.delta).local(f, WeightSpec{obs.delta, obs.center}, 0);
    case ObservableKind::hm_ul:
      return evaluator(obs.delta).ul(f, obs.m).value;
    case ObservableKind::amplitude_moment: {
      double acc = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (!win.contains(f.grid.point(i), f.grid.d)) continue;
        acc += std::pow(std::abs(f[i]), obs.p);
        ++n;
      }
      return n ? acc / static_cast<double>(n) : 0.0;
    }
    case ObservableKind::spatial_correlation: {
      const int shift = static_cast<int>(std::lround(obs.lag / f.grid.spacing()));
      const int n = f.grid.points_per_dim;
      auto wrap = [n](int v) { return static_cast<std::size_t>(((v % n) + n) % n); };
      double acc = 0.0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (!win.contains(f.grid.point(i), f.grid.d)) continue;
        std::size_t j;
        if (f.grid.d == 1) {
          j = wrap(static_cast<int>(i) + shift);
        } else {
          const auto row = static_cast<int>(i / n);
          const auto col = static_cast<std::size_t>(i % n);
          j = wrap(row + shift) * n + col;
        }
        acc += (std::conj(f[i]) * f[j]).real();
        ++cnt;
      }
      return cnt ? acc / static_cast<double>(cnt) : 0.0;
    }
  }
  return 0.0;
}

}  // namespace sgl
