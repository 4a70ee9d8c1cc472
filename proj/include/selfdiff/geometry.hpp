#pragma once

#include <cmath>

namespace selfdiff {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  Vec2 operator-() const { return {-x, -y}; }

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  double angle() const { return std::atan2(y, x); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

// Unit vector at the given angle.
inline Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

struct Mat2 {
  // Row-major: [[a11, a12], [a21, a22]].
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
  Mat2 transpose() const { return {a11, a21, a12, a22}; }
  Mat2 operator+(Mat2 o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }

  // Smallest eigenvalue of the symmetric part.
  double min_eig_sym() const {
    const double s12 = 0.5 * (a12 + a21);
    const double tr = a11 + a22;
    const double disc = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + s12 * s12);
    return 0.5 * tr - disc;
  }

  // Frobenius norm.
  double frob() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  // Counterclockwise rotation by theta: maps (1,0) to (cos t, sin t).
  static Mat2 rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
  }
};

}  // namespace selfdiff
