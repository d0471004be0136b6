#include <cmath>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/field.hpp"

namespace sgl {

Point Grid::point(std::size_t flat) const {
  if (d == 1) return {coord(static_cast<int>(flat)), 0.0};
  const auto n = static_cast<std::size_t>(points_per_dim);
  return {coord(static_cast<int>(flat / n)), coord(static_cast<int>(flat % n))};
}

int Grid::index_of(double x) const {
  const long i = std::lround((x + 0.5 * box_length) / spacing());
  const long n = points_per_dim;
  return static_cast<int>(((i % n) + n) % n);
}

void Grid::validate() const {
  if (d != 1 && d != 2) throw ValidationError("dimension_unsupported", "grid dimension must be 1 or 2");
  if (!(box_length > 0.0)) throw ValidationError("grid_invalid", "box_length must be positive");
  if (points_per_dim < 4 || (points_per_dim & (points_per_dim - 1)) != 0) {
    std::ostringstream os;
    os << "points_per_dim must be a power of two >= 4, got " << points_per_dim;
    throw ValidationError("grid_invalid", os.str());
  }
}

Field Field::zeros(const Grid& g) { return Field{g, std::vector<cplx>(g.size())}; }

Field Field::constant(const Grid& g, cplx c) { return Field{g, std::vector<cplx>(g.size(), c)}; }

bool Field::finite() const {
  for (const cplx& z : values)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

Field operator-(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw ValidationError("grid_mismatch", "fields live on different grids");
  Field r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

Field operator*(double s, const Field& a) {
  Field r = a;
  for (cplx& z : r.values) z *= s;
  return r;
}

bool Window::contains(const Point& x, int d) const {
  for (int k = 0; k < d; ++k) {
    const double lo = center[k] - 0.5 * side;
    if (x[k] < lo - 1e-12 || x[k] >= lo + side - 1e-12) return false;
  }
  return true;
}

void Window::validate_in(const Grid& g) const {
  if (!(side > 0.0)) throw ValidationError("window_invalid", "window side must be positive");
  for (int k = 0; k < g.d; ++k) {
    if (std::abs(center[k]) + side > 0.5 * g.box_length + 1e-9) {
      std::ostringstream os;
      os << "window of side " << side << " centred at " << center[k]
         << " violates the boundary margin of a box of length " << g.box_length;
      throw ValidationError("window_outside_margin", os.str());
    }
  }
}

std::vector<std::size_t> Window::indices(const Grid& g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (contains(g.point(i), g.d)) out.push_back(i);
  return out;
}

}  // namespace sgl
