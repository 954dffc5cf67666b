#ifndef PLASTHOM_MAT3_HPP
#define PLASTHOM_MAT3_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "plasthom/errors.hpp"

namespace plasthom {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Dense 3x3, row-major. All algebra below is exact small-matrix arithmetic:
// determinants by cofactor expansion, inverses through the adjugate.
struct Mat3 {
  std::array<double, 9> a{};

  Mat3() = default;
  Mat3(double m00, double m01, double m02, double m10, double m11, double m12,
       double m20, double m21, double m22)
      : a{m00, m01, m02, m10, m11, m12, m20, m21, m22} {}

  static Mat3 identity() { return Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1}; }
  static Mat3 zero() { return Mat3{}; }
  static Mat3 diag(double x, double y, double z) {
    return Mat3{x, 0, 0, 0, y, 0, 0, 0, z};
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
  double operator()(int i, int j) const {
    return a[static_cast<std::size_t>(3 * i + j)];
  }

  Mat3& operator+=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) a[i] += o.a[i];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) a[i] -= o.a[i];
    return *this;
  }
  Mat3& operator*=(double s) {
    for (double& x : a) x *= s;
    return *this;
  }

  friend Mat3 operator+(Mat3 l, const Mat3& r) { return l += r; }
  friend Mat3 operator-(Mat3 l, const Mat3& r) { return l -= r; }
  friend Mat3 operator*(Mat3 l, double s) { return l *= s; }
  friend Mat3 operator*(double s, Mat3 r) { return r *= s; }
  friend Mat3 operator-(const Mat3& m) { return m * -1.0; }

  friend Mat3 operator*(const Mat3& l, const Mat3& r) {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out(i, j) = l(i, 0) * r(0, j) + l(i, 1) * r(1, j) + l(i, 2) * r(2, j);
    return out;
  }

  friend Vec3 operator*(const Mat3& m, const Vec3& v) {
    return Vec3{m(0, 0) * v[0] + m(0, 1) * v[1] + m(0, 2) * v[2],
                m(1, 0) * v[0] + m(1, 1) * v[1] + m(1, 2) * v[2],
                m(2, 0) * v[0] + m(2, 1) * v[1] + m(2, 2) * v[2]};
  }
};

inline Mat3 transpose(const Mat3& m) {
  return Mat3{m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1),
              m(2, 1), m(0, 2), m(1, 2), m(2, 2)};
}

inline double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

inline double frobenius_inner(const Mat3& x, const Mat3& y) {
  double s = 0.0;
  for (int i = 0; i < 9; ++i) s += x.a[i] * y.a[i];
  return s;
}

inline double frobenius(const Mat3& m) {
  return std::sqrt(frobenius_inner(m, m));
}

inline Mat3 outer(const Vec3& u, const Vec3& v) {
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = u[i] * v[j];
  return out;
}

// Cofactor expansion along the first row.
inline double det(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// cofactor(m)(i,j) = signed minor; adjugate = transpose(cofactor).
inline Mat3 cofactor(const Mat3& m) {
  Mat3 c;
  c(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  c(0, 1) = -(m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0));
  c(0, 2) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
  c(1, 0) = -(m(0, 1) * m(2, 2) - m(0, 2) * m(2, 1));
  c(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
  c(1, 2) = -(m(0, 0) * m(2, 1) - m(0, 1) * m(2, 0));
  c(2, 0) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
  c(2, 1) = -(m(0, 0) * m(1, 2) - m(0, 2) * m(1, 0));
  c(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return c;
}

inline constexpr double singular_det_tol = 1e-12;

// Adjugate over determinant. For det = 1 inputs this reduces to the exact
// cofactor-transpose shortcut.
inline Mat3 inverse(const Mat3& m) {
  const double d = det(m);
  if (std::abs(d) <= singular_det_tol) {
    throw SingularMatrix("inverse: |det| = " + std::to_string(std::abs(d)) +
                         " <= 1e-12");
  }
  return transpose(cofactor(m)) * (1.0 / d);
}

inline constexpr double sl3_det_tol = 1e-9;
inline constexpr double sl3_trace_tol = 1e-12;
inline constexpr double retract_min_det = 1e-8;

// Trace-free 3x3 velocity; |trace| <= 1e-12 is enforced at construction.
struct Sl3Tangent {
  Mat3 m;

  Sl3Tangent() = default;
  explicit Sl3Tangent(const Mat3& candidate) : m(candidate) {
    const double t = std::abs(trace(candidate));
    if (t > sl3_trace_tol) {
      throw NotTangent("Sl3Tangent: |trace| = " + std::to_string(t) +
                       " > 1e-12");
    }
  }

  operator const Mat3&() const { return m; }
};

// Removes the spherical part: m - (tr(m)/3) I. Idempotent.
inline Sl3Tangent project_sl3(const Mat3& m) {
  const double t = trace(m) / 3.0;
  Mat3 out = m;
  out(0, 0) -= t;
  out(1, 1) -= t;
  out(2, 2) -= t;
  // Recenter exactly: cancellation can leave a few ulp of residual trace.
  const double r = trace(out) / 3.0;
  out(0, 0) -= r;
  out(1, 1) -= r;
  out(2, 2) -= r;
  Sl3Tangent tan;
  tan.m = out;
  return tan;
}

// det(m)^(-1/3) * m. Multiplicative projection onto det = 1; rejects
// det <= 1e-8 (no volume-preserving rescaling across det <= 0).
inline Mat3 retract_sl3(const Mat3& m) {
  const double d = det(m);
  if (!(d > retract_min_det)) {
    throw NonPositiveDeterminant("retract_sl3: det = " + std::to_string(d) +
                                 " <= 1e-8");
  }
  return m * std::pow(d, -1.0 / 3.0);
}

// Unit-determinant matrix. checked() rejects |det-1| > 1e-9; retracted()
// rescales first.
struct SL3Element {
  Mat3 m = Mat3::identity();

  SL3Element() = default;

  static SL3Element checked(const Mat3& candidate) {
    const double err = std::abs(det(candidate) - 1.0);
    if (err > sl3_det_tol) {
      throw NonPositiveDeterminant("SL3Element: |det - 1| = " +
                                   std::to_string(err) + " > 1e-9");
    }
    SL3Element e;
    e.m = candidate;
    return e;
  }

  static SL3Element retracted(const Mat3& candidate) {
    SL3Element e;
    e.m = retract_sl3(candidate);
    return e;
  }

  operator const Mat3&() const { return m; }
};

namespace detail {

// Principal log of a proper rotation, including the half-turn branch
// (eigenvalue pair -1), where the axis comes from the symmetric part.
inline Mat3 rotation_log(const Mat3& r) {
  const double c = std::min(1.0, std::max(-1.0, (trace(r) - 1.0) / 2.0));
  const double theta = std::acos(c);
  const Mat3 skew = (r - transpose(r)) * 0.5;
  if (theta < 1e-6) {
    const double t2 = theta * theta;
    return skew * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  if (theta < 3.14159265358979 - 1e-4) {
    return skew * (theta / std::sin(theta));
  }
  // Near pi: axis a from a a^T = I + (sym(r) - I)/(1 - c).
  const Mat3 s = (r + transpose(r)) * 0.5;
  Vec3 a{};
  int anchor = 0;
  double best = -1.0;
  for (int i = 0; i < 3; ++i) {
    const double ai2 = 1.0 + (s(i, i) - 1.0) / (1.0 - c);
    a[i] = std::sqrt(std::max(0.0, ai2));
    if (a[i] > best) {
      best = a[i];
      anchor = i;
    }
  }
  for (int j = 0; j < 3; ++j) {
    if (j == anchor) continue;
    // Off-diagonal of a a^T = I + (sym(r) - I)/(1 - c).
    a[j] = (s(anchor, j) / (1.0 - c)) / a[anchor];
  }
  // Orient along the residual skew part if it is meaningful, else make the
  // anchor component positive.
  const Vec3 w{skew(2, 1), skew(0, 2), skew(1, 0)};
  double align = a[0] * w[0] + a[1] * w[1] + a[2] * w[2];
  if (std::abs(align) <= 1e-12 * (1.0 + norm(w))) {
    align = a[anchor];
  }
  if (align < 0.0) {
    a = Vec3{-a[0], -a[1], -a[2]};
  }
  const double n = norm(a);
  if (n <= 0.0) throw LogDivergence("rotation_log: degenerate axis");
  for (double& x : a) x *= theta / n;
  return Mat3{0, -a[2], a[1], a[2], 0, -a[0], -a[1], a[0], 0};
}

inline bool is_special_orthogonal(const Mat3& m, double tol) {
  const Mat3 g = transpose(m) * m - Mat3::identity();
  return frobenius(g) <= tol && std::abs(det(m) - 1.0) <= tol;
}

// Denman-Beavers square root; diverges off the principal branch.
inline Mat3 sqrt_db(const Mat3& m) {
  Mat3 y = m;
  Mat3 z = Mat3::identity();
  for (int it = 0; it < 60; ++it) {
    Mat3 yi, zi;
    try {
      yi = inverse(y);
      zi = inverse(z);
    } catch (const SingularMatrix&) {
      throw LogDivergence("mat_log: square-root iteration hit a singular "
                          "iterate (input off the principal branch)");
    }
    const Mat3 yn = (y + zi) * 0.5;
    const Mat3 zn = (z + yi) * 0.5;
    const double change = frobenius(yn - y);
    y = yn;
    z = zn;
    if (!std::isfinite(change)) {
      throw LogDivergence("mat_log: square-root iteration diverged");
    }
    if (change <= 1e-15 * (1.0 + frobenius(y))) return y;
  }
  throw LogDivergence("mat_log: square-root iteration did not converge");
}

}  // namespace detail

// Scaling-and-squaring exponential; series evaluated at ||M/2^s|| <= 0.5.
inline Mat3 mat_exp(const Mat3& m) {
  const double nrm = frobenius(m);
  if (!std::isfinite(nrm)) throw LogDivergence("mat_exp: non-finite input");
  int s = 0;
  double scaled = nrm;
  while (scaled > 0.5 && s < 60) {
    scaled *= 0.5;
    ++s;
  }
  const Mat3 t = m * std::ldexp(1.0, -s);
  Mat3 term = Mat3::identity();
  Mat3 sum = Mat3::identity();
  for (int k = 1; k <= 30; ++k) {
    term = term * t * (1.0 / k);
    sum += term;
    if (frobenius(term) <= 1e-18 * frobenius(sum)) break;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

// Principal matrix logarithm. Strategy: proper rotations take the closed
// form (half turns included); everything else runs inverse scaling and
// squaring (Denman-Beavers roots) until ||m - I|| <= 0.35, then the Gregory
// series. Inputs off the principal branch throw LogDivergence; no secondary
// branch is ever guessed.
inline Mat3 mat_log(const Mat3& m) {
  for (double x : m.a) {
    if (!std::isfinite(x)) throw LogDivergence("mat_log: non-finite input");
  }
  if (detail::is_special_orthogonal(m, 1e-12)) {
    return detail::rotation_log(m);
  }
  if (det(m) <= 0.0) {
    throw LogDivergence("mat_log: det <= 0 is off the principal branch");
  }
  Mat3 cur = m;
  int k = 0;
  while (frobenius(cur - Mat3::identity()) > 0.35) {
    if (k >= 40) {
      throw LogDivergence("mat_log: input too far from identity after 40 "
                          "inverse square roots");
    }
    cur = detail::sqrt_db(cur);
    ++k;
  }
  // Gregory series: log m = 2 * sum_{j odd} A^j / j, A = (m-I)(m+I)^{-1}.
  const Mat3 eye = Mat3::identity();
  const Mat3 A = (cur - eye) * inverse(cur + eye);
  const Mat3 A2 = A * A;
  Mat3 power = A;
  Mat3 sum = A;
  for (int j = 3; j <= 61; j += 2) {
    power = power * A2;
    const Mat3 term = power * (1.0 / j);
    sum += term;
    if (frobenius(term) <= 1e-18 * (1.0 + frobenius(sum))) break;
  }
  return sum * std::ldexp(2.0, k);
}

inline std::string to_string(const Mat3& m) {
  std::string s = "[";
  for (int i = 0; i < 3; ++i) {
    s += "[";
    for (int j = 0; j < 3; ++j) {
      s += std::to_string(m(i, j));
      if (j < 2) s += ", ";
    }
    s += (i < 2) ? "], " : "]";
  }
  return s + "]";
}

// Frobenius-orthonormal basis of sl(3): two diagonal traceless directions
// followed by the six off-diagonal units.
inline const std::array<Mat3, 8>& sl3_basis() {
  static const std::array<Mat3, 8> basis = [] {
    std::array<Mat3, 8> b{};
    const double s2 = 1.0 / std::sqrt(2.0);
    const double s6 = 1.0 / std::sqrt(6.0);
    int at = 0;
    Mat3 d1 = Mat3::zero();
    d1(0, 0) = s2;
    d1(1, 1) = -s2;
    b[at++] = d1;
    Mat3 d2 = Mat3::zero();
    d2(0, 0) = s6;
    d2(1, 1) = s6;
    d2(2, 2) = -2.0 * s6;
    b[at++] = d2;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (r == c) continue;
        Mat3 e = Mat3::zero();
        e(r, c) = 1.0;
        b[at++] = e;
      }
    }
    return b;
  }();
  return basis;
}

}  // namespace plasthom

#endif
