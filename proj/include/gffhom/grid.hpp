#pragma once

// Pointwise 2-D linear algebra and uniform-grid field containers.
//
// Index conventions used throughout the library:
//   * A tangent vector phi has components (phi^1, phi^2) -> Vec2{x, y}.
//   * An endomorphism M of cotangent space acts on column vectors of
//     cotangent components; M(j, i) is row j, column i.  For a tangent
//     vector field phi, grad phi has M(j, i) = d_j phi^i, so that
//     composition of endomorphisms is the ordinary matrix product.
//   * J is the counter-clockwise rotation by pi/2: J = [[0, -1], [1, 0]].
//   * The i-indexed family grad d_i phi is stored as H_i(j, l) = d_j d_i phi^l.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gffhom/error.hpp"

namespace gffhom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double operator[](int i) const { return i == 0 ? x : y; }

  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

inline Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, const Vec2& a) { return {c * a.x, c * a.y}; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm2(const Vec2& a) { return dot(a, a); }
/// Counter-clockwise quarter rotation.
inline Vec2 rotate_j(const Vec2& a) { return {-a.y, a.x}; }

struct Mat2 {
  double xx = 0.0, xy = 0.0;
  double yx = 0.0, yy = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 rotation_j() { return {0.0, -1.0, 1.0, 0.0}; }

  double operator()(int row, int col) const {
    return row == 0 ? (col == 0 ? xx : xy) : (col == 0 ? yx : yy);
  }

  Mat2& operator+=(const Mat2& o) {
    xx += o.xx;
    xy += o.xy;
    yx += o.yx;
    yy += o.yy;
    return *this;
  }
  Mat2& operator-=(const Mat2& o) {
    xx -= o.xx;
    xy -= o.xy;
    yx -= o.yx;
    yy -= o.yy;
    return *this;
  }
};

inline Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
inline Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
inline Mat2 operator*(double c, const Mat2& a) { return {c * a.xx, c * a.xy, c * a.yx, c * a.yy}; }

/// Composition (matrix product).
inline Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy,
          a.yx * b.xx + a.yy * b.yx, a.yx * b.xy + a.yy * b.yy};
}

inline Vec2 operator*(const Mat2& a, const Vec2& v) {
  return {a.xx * v.x + a.xy * v.y, a.yx * v.x + a.yy * v.y};
}

inline Mat2 adjoint(const Mat2& a) { return {a.xx, a.yx, a.xy, a.yy}; }
inline double trace(const Mat2& a) { return a.xx + a.yy; }
inline double determinant(const Mat2& a) { return a.xx * a.yy - a.xy * a.yx; }
/// Squared Frobenius norm tr(a* a).
inline double frobenius2(const Mat2& a) {
  return a.xx * a.xx + a.xy * a.xy + a.yx * a.yx + a.yy * a.yy;
}
/// xi (x) phi as an endomorphism: zeta -> xi (zeta . phi).
inline Mat2 outer(const Vec2& xi, const Vec2& phi) {
  return {xi.x * phi.x, xi.x * phi.y, xi.y * phi.x, xi.y * phi.y};
}

struct GridSpec {
  int n = 0;
  double box_length = 0.0;

  std::size_t points() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }
  double spacing() const { return box_length / n; }
  /// Coordinate of grid index a along either axis.
  double coord(int a) const { return a * spacing(); }

  bool operator==(const GridSpec&) const = default;
};

/// Field with C real components per grid point, stored component-major.
template <int C>
class GridField {
 public:
  static constexpr int components = C;

  GridField() = default;
  explicit GridField(GridSpec spec) : spec_(spec), data_(spec.points() * C, 0.0) {}

  const GridSpec& spec() const { return spec_; }
  std::size_t points() const { return spec_.points(); }

  std::span<double> component(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * points(), points()};
  }
  std::span<const double> component(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * points(), points()};
  }

  double& at(int c, std::size_t p) { return data_[static_cast<std::size_t>(c) * points() + p]; }
  double at(int c, std::size_t p) const { return data_[static_cast<std::size_t>(c) * points() + p]; }

  std::span<const double> raw() const { return data_; }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  GridSpec spec_{};
  std::vector<double> data_;
};

class ScalarGrid : public GridField<1> {
 public:
  using GridField<1>::GridField;
  double operator[](std::size_t p) const { return at(0, p); }
  double& operator[](std::size_t p) { return at(0, p); }
};

class VectorGrid : public GridField<2> {
 public:
  using GridField<2>::GridField;
  Vec2 get(std::size_t p) const { return {at(0, p), at(1, p)}; }
  void set(std::size_t p, const Vec2& v) {
    at(0, p) = v.x;
    at(1, p) = v.y;
  }
};

class EndoGrid : public GridField<4> {
 public:
  using GridField<4>::GridField;
  Mat2 get(std::size_t p) const { return {at(0, p), at(1, p), at(2, p), at(3, p)}; }
  void set(std::size_t p, const Mat2& m) {
    at(0, p) = m.xx;
    at(1, p) = m.xy;
    at(2, p) = m.yx;
    at(3, p) = m.yy;
  }
};

/// The family i -> grad d_i phi, component index 4 i + 2 j + l.
class Tensor3Grid : public GridField<8> {
 public:
  using GridField<8>::GridField;
  Mat2 get(std::size_t p, int i) const {
    const int o = 4 * i;
    return {at(o, p), at(o + 1, p), at(o + 2, p), at(o + 3, p)};
  }
  void set(std::size_t p, int i, const Mat2& m) {
    const int o = 4 * i;
    at(o, p) = m.xx;
    at(o + 1, p) = m.xy;
    at(o + 2, p) = m.yx;
    at(o + 3, p) = m.yy;
  }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) throw SimError(ErrorCode::GridMismatch, what);
}

/// Space average of a pointwise functional.
template <class F>
double space_average(std::size_t points, F&& f) {
  double sum = 0.0;
  for (std::size_t p = 0; p < points; ++p) sum += f(p);
  return points == 0 ? 0.0 : sum / static_cast<double>(points);
}

}  // namespace gffhom
