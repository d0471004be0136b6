#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace sgl {

using cplx = std::complex<double>;
/// A point of R^d, d <= 2; the second coordinate is ignored when d == 1.
using Point = std::array<double, 2>;

struct Grid {
  int d = 1;
  double box_length = 100.0;
  int points_per_dim = 512;

  double spacing() const { return box_length / points_per_dim; }
  std::size_t size() const {
    return d == 1 ? static_cast<std::size_t>(points_per_dim)
                  : static_cast<std::size_t>(points_per_dim) * points_per_dim;
  }
  /// Coordinate of grid index i along any axis; the box is [-B/2, B/2).
  double coord(int i) const { return -0.5 * box_length + i * spacing(); }
  Point point(std::size_t flat) const;
  /// Nearest grid index to coordinate x (wrapped periodically).
  int index_of(double x) const;
  void validate() const;
  bool operator==(const Grid&) const = default;
};

struct Field {
  Grid grid;
  std::vector<cplx> values;

  static Field zeros(const Grid& g);
  static Field constant(const Grid& g, cplx c);
  cplx& operator[](std::size_t i) { return values[i]; }
  const cplx& operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
  bool finite() const;
};

Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);

/// Axis-aligned cube Q_L of side `side` centred at `center`.
struct Window {
  double side = 1.0;
  Point center{0.0, 0.0};

  bool contains(const Point& x, int d) const;
  /// Enforces side > 0 and a margin of at least side/2 to the box boundary.
  void validate_in(const Grid& g) const;
  /// Flat grid indices inside the window, in row-major order.
  std::vector<std::size_t> indices(const Grid& g) const;
};

struct WeightSpec {
  double delta = 0.2;
  Point center{0.0, 0.0};
};

}  // namespace sgl
