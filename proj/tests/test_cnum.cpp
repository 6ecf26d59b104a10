#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cxbench/cnum.hpp"
#include "test_util.hpp"

using namespace cxbench;

namespace {
constexpr double kPi = std::numbers::pi;

bool near(const RealMat2& a, const RealMat2& b, double tol) { return max_abs(a - b) <= tol; }
}  // namespace

TEST_SUITE("cnum") {
  TEST_CASE("cmul expands (ax - by) + i(ay + bx)") {
    CHECK(cmul({1, 2}, {3, 4}) == Cplx(-5, 10));
    CHECK(cmul({0, 1}, {1, 0}) == Cplx(0, 1));
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      Cplx w = testutil::random_cplx(rng);
      CHECK(cmul(w, {1, 0}) == w);
    }
  }

  TEST_CASE("as_real_matrix") {
    CHECK(as_real_matrix({1, 0}) == RealMat2::identity());
    CHECK(as_real_matrix({0, 1}) == RealMat2::j());
    CHECK(RealMat2::j() == RealMat2{0, -1, 1, 0});
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      Cplx w = testutil::random_cplx(rng), z = testutil::random_cplx(rng);
      Cplx m = as_real_matrix(w).apply(z), c = cmul(w, z);
      CHECK(std::abs(m.real() - c.real()) <= 1e-12);
      CHECK(std::abs(m.imag() - c.imag()) <= 1e-12);
    }
  }

  TEST_CASE("rotation") {
    CHECK(near(rotation(0.0), RealMat2::identity(), 0.0));
    CHECK(near(rotation(kPi / 2), RealMat2::j(), 1e-15));
    auto v = rotation(kPi / 4).apply(1.0, 0.0);
    CHECK(v[0] == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-15));
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      double a = rng.uniform(-7, 7), b = rng.uniform(-7, 7);
      CHECK(near(rotation(a) * rotation(b), rotation(a + b), 1e-12));
    }
  }

  TEST_CASE("commutes_with_rotations") {
    CHECK(commutes_with_rotations(3.0 * RealMat2::identity() + 2.0 * RealMat2::j(), 1e-12));
    CHECK_FALSE(commutes_with_rotations(RealMat2{1, 0, 0, 2}, 1e-6));

    // Oracle: explicit W R_phi against R_phi W on a 16-point grid.
    auto commutes_on_grid = [](const RealMat2& w, double tol) {
      for (int k = 0; k < 16; ++k) {
        RealMat2 r = rotation(2 * kPi * k / 16.0);
        if (max_abs(w * r - r * w) > tol) return false;
      }
      return true;
    };
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
      RealMat2 w{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
      RealMat2 proj = as_real_matrix(complex_part(w));
      CHECK(commutes_with_rotations(proj, 1e-12));
      CHECK(commutes_on_grid(proj, 1e-12));
      CHECK(commutes_with_rotations(w, 1e-9) == commutes_on_grid(w, 1e-9));
    }
  }

  TEST_CASE("commuting matrices lie near span{I, J}") {
    Rng rng(5);
    const double tol = 1e-3;
    for (int i = 0; i < 500; ++i) {
      Cplx c = testutil::random_cplx(rng);
      RealMat2 w = as_real_matrix(c);
      // Perturb so that some samples commute within tol and some do not.
      w = w + RealMat2{rng.normal(0, 4e-4), rng.normal(0, 4e-4), rng.normal(0, 4e-4), rng.normal(0, 4e-4)};
      if (commutes_with_rotations(w, tol)) {
        CHECK(max_abs(w - as_real_matrix(complex_part(w))) <= tol);
      }
    }
  }

  TEST_CASE("ring homomorphism, modulus and argument") {
    Rng rng(6);
    for (int i = 0; i < 300; ++i) {
      Cplx a = testutil::random_cplx(rng), b = testutil::random_cplx(rng);
      CHECK(near(as_real_matrix(a) * as_real_matrix(b), as_real_matrix(cmul(a, b)), 1e-12));
      CHECK(near(as_real_matrix(a) + as_real_matrix(b), as_real_matrix(a + b), 1e-15));
      Cplx p = cmul(a, b);
      CHECK(std::abs(std::abs(p) - std::abs(a) * std::abs(b)) <= 1e-12);
      double d = std::remainder(arg(p) - arg(a) - arg(b), 2 * kPi);
      CHECK(std::abs(d) <= 1e-12);
    }
  }

  TEST_CASE("arg range") {
    CHECK(arg({0, 0}) == 0.0);
    CHECK(arg({-1, 0}) == doctest::Approx(kPi));
    CHECK(arg({-1, -0.0}) == doctest::Approx(kPi));
    CHECK(arg({0, -1}) == doctest::Approx(-kPi / 2));
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      double a = arg(testutil::random_cplx(rng));
      CHECK(a > -kPi);
      CHECK(a <= kPi);
    }
  }

  TEST_CASE("rotate") {
    std::vector<Cplx> x{{1, 0}, {0, 2}, {-1, 1}};
    auto y = rotate(x, 0.0);
    CHECK(y == x);
    y = rotate(x, kPi / 2);
    CHECK(std::abs(y[0] - Cplx(0, 1)) <= 1e-15);
    CHECK(std::abs(y[1] - Cplx(-2, 0)) <= 1e-15);
  }
}
