#include "cxbench/cnum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cxbench {

double arg(Cplx z) noexcept {
  // atan2 returns -pi for (negative, -0.0); fold it onto +pi.
  const double a = std::atan2(z.imag(), z.real());
  return a == -M_PI ? M_PI : a;
}

double max_abs(const RealMat2& m) noexcept {
  return std::max({std::abs(m.p), std::abs(m.q), std::abs(m.r), std::abs(m.s)});
}

RealMat2 rotation(double phi) noexcept {
  const double c = std::cos(phi), s = std::sin(phi);
  return {c, -s, s, c};
}

bool commutes_with_rotations(const RealMat2& w, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("commutes_with_rotations: tol must be > 0");
  const RealMat2 j = RealMat2::j();
  return max_abs(w * j - j * w) <= tol;
}

Cplx complex_part(const RealMat2& w) noexcept {
  return {0.5 * (w.p + w.s), 0.5 * (w.r - w.q)};
}

std::vector<Cplx> rotate(std::span<const Cplx> x, double phi) {
  const Cplx e = std::polar(1.0, phi);
  std::vector<Cplx> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [e](Cplx z) { return cmul(e, z); });
  return out;
}

}  // namespace cxbench
