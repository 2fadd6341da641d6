#pragma once

#include <array>
#include <cmath>

#include "pesgen/error.hpp"

namespace pesgen {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

/// 3x3 matrix, row-major. Lattice cells store the lattice vectors as rows,
/// so a point with fractional coordinates f has Cartesian position f * cell.
struct Mat3 {
  std::array<double, 9> m{};

  double& operator()(int r, int c) { return m[3 * r + c]; }
  double operator()(int r, int c) const { return m[3 * r + c]; }

  static Mat3 zero() { return {}; }
  static Mat3 identity() {
    Mat3 a;
    a(0, 0) = a(1, 1) = a(2, 2) = 1.0;
    return a;
  }

  Vec3 row(int r) const { return {m[3 * r], m[3 * r + 1], m[3 * r + 2]}; }
  void set_row(int r, const Vec3& v) { m[3 * r] = v.x; m[3 * r + 1] = v.y; m[3 * r + 2] = v.z; }

  Mat3 transpose() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  /// Exact 3x3 inverse via the adjugate. Throws on a degenerate matrix.
  Mat3 inverse() const {
    const double d = det();
    if (!(std::abs(d) > 1e-14)) throw InvalidInput("degenerate 3x3 matrix (det ~ 0)");
    Mat3 inv;
    inv(0, 0) = (m[4] * m[8] - m[5] * m[7]) / d;
    inv(0, 1) = (m[2] * m[7] - m[1] * m[8]) / d;
    inv(0, 2) = (m[1] * m[5] - m[2] * m[4]) / d;
    inv(1, 0) = (m[5] * m[6] - m[3] * m[8]) / d;
    inv(1, 1) = (m[0] * m[8] - m[2] * m[6]) / d;
    inv(1, 2) = (m[2] * m[3] - m[0] * m[5]) / d;
    inv(2, 0) = (m[3] * m[7] - m[4] * m[6]) / d;
    inv(2, 1) = (m[1] * m[6] - m[0] * m[7]) / d;
    inv(2, 2) = (m[0] * m[4] - m[1] * m[3]) / d;
    return inv;
  }

  /// Matrix times column vector: (M v)_r = sum_c M(r,c) v_c.
  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Mat3& operator+=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) m[i] += o.m[i];
    return *this;
  }
  Mat3& operator*=(double s) {
    for (double& v : m) v *= s;
    return *this;
  }
};

inline Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
inline Mat3 operator*(Mat3 a, double s) { return a *= s; }
inline Mat3 operator*(double s, Mat3 a) { return a *= s; }
inline Mat3 operator-(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] - b.m[i];
  return r;
}

/// Row vector times matrix: (v M)_c = sum_r v_r M(r,c). Used for fractional -> Cartesian.
inline Vec3 operator*(const Vec3& v, const Mat3& a) {
  return {v.x * a(0, 0) + v.y * a(1, 0) + v.z * a(2, 0),
          v.x * a(0, 1) + v.y * a(1, 1) + v.z * a(2, 1),
          v.x * a(0, 2) + v.y * a(1, 2) + v.z * a(2, 2)};
}

inline double max_abs(const Mat3& a) {
  double r = 0.0;
  for (double v : a.m) r = std::max(r, std::abs(v));
  return r;
}

inline bool is_symmetric(const Mat3& a, double tol = 1e-12) {
  return std::abs(a(0, 1) - a(1, 0)) <= tol && std::abs(a(0, 2) - a(2, 0)) <= tol &&
         std::abs(a(1, 2) - a(2, 1)) <= tol;
}

}  // namespace pesgen
