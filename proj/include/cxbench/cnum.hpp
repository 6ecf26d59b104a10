#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace cxbench {

/// Complex scalar; channel order is (re, im) everywhere in the library.
using Cplx = std::complex<double>;

/// (a + ib)(x + iy) = (ax - by) + i(ay + bx), spelled out so the arithmetic
/// matches the 2x2 embedding below term by term.
constexpr Cplx cmul(Cplx w, Cplx z) noexcept {
  return {w.real() * z.real() - w.imag() * z.imag(),
          w.real() * z.imag() + w.imag() * z.real()};
}

/// Principal argument in (-pi, pi]. arg(0) is 0.
double arg(Cplx z) noexcept;

/// Row-major real 2x2 matrix [[p, q], [r, s]].
struct RealMat2 {
  double p = 0.0, q = 0.0, r = 0.0, s = 0.0;

  static constexpr RealMat2 identity() noexcept { return {1.0, 0.0, 0.0, 1.0}; }
  /// J = [[0, -1], [1, 0]], the matrix of multiplication by i.
  static constexpr RealMat2 j() noexcept { return {0.0, -1.0, 1.0, 0.0}; }

  constexpr std::array<double, 2> apply(double x, double y) const noexcept {
    return {p * x + q * y, r * x + s * y};
  }
  constexpr Cplx apply(Cplx z) const noexcept {
    auto [u, v] = apply(z.real(), z.imag());
    return {u, v};
  }

  friend constexpr RealMat2 operator*(const RealMat2& a, const RealMat2& b) noexcept {
    return {a.p * b.p + a.q * b.r, a.p * b.q + a.q * b.s,
            a.r * b.p + a.s * b.r, a.r * b.q + a.s * b.s};
  }
  friend constexpr RealMat2 operator+(const RealMat2& a, const RealMat2& b) noexcept {
    return {a.p + b.p, a.q + b.q, a.r + b.r, a.s + b.s};
  }
  friend constexpr RealMat2 operator-(const RealMat2& a, const RealMat2& b) noexcept {
    return {a.p - b.p, a.q - b.q, a.r - b.r, a.s - b.s};
  }
  friend constexpr RealMat2 operator*(double c, const RealMat2& a) noexcept {
    return {c * a.p, c * a.q, c * a.r, c * a.s};
  }
  friend constexpr bool operator==(const RealMat2&, const RealMat2&) = default;
};

/// Largest absolute entry.
double max_abs(const RealMat2& m) noexcept;

/// w = a + ib  ->  aI + bJ = [[a, -b], [b, a]].
constexpr RealMat2 as_real_matrix(Cplx w) noexcept {
  return {w.real(), -w.imag(), w.imag(), w.real()};
}

/// Rotation by phi radians, R_phi = exp(phi J).
RealMat2 rotation(double phi) noexcept;

/// True iff ||WJ - JW||_max <= tol. Equivalent (up to tol) to W lying in span{I, J}.
bool commutes_with_rotations(const RealMat2& w, double tol);

/// Nearest aI + bJ to W in Frobenius norm: a = (p + s)/2, b = (r - q)/2.
Cplx complex_part(const RealMat2& w) noexcept;

/// x_t <- e^{i phi} x_t.
std::vector<Cplx> rotate(std::span<const Cplx> x, double phi);

}  // namespace cxbench
