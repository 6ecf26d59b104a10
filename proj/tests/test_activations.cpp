#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cxbench/activations.hpp"
#include "cxbench/errors.hpp"
#include "cxbench/families.hpp"
#include "test_util.hpp"

using namespace cxbench;

namespace {

constexpr double kPi = std::numbers::pi;

std::optional<double> bias_for(ActivationId id, double b = 0.0) {
  return id == ActivationId::modrelu ? std::optional<double>(b) : std::nullopt;
}

}  // namespace

TEST_SUITE("activations") {
  TEST_CASE("apply examples") {
    CHECK(apply(ActivationId::crelu, {-1, 2}) == Cplx(0, 2));
    CHECK(apply(ActivationId::zrelu, {1, 1}) == Cplx(1, 1));
    CHECK(apply(ActivationId::zrelu, {-1, 1}) == Cplx(0, 0));
    Cplx s = apply(ActivationId::siglog, {3, 4});
    CHECK(std::abs(s - Cplx(3, 4) / 6.0) <= 1e-15);
    CHECK(std::abs(s) == doctest::Approx(5.0 / 6.0));
    CHECK(apply(ActivationId::modrelu, {0, 0}, 0.5) == Cplx(0, 0));
    CHECK(std::abs(apply(ActivationId::modrelu, {3, 4}, -1.0) - Cplx(3, 4) * (4.0 / 5.0)) <= 1e-15);
    CHECK(apply(ActivationId::modrelu, {0.3, 0.4}, -1.0) == Cplx(0, 0));
    CHECK(std::abs(apply(ActivationId::cardioid, {0, 2}) - Cplx(0, 1)) <= 1e-15);
    CHECK(std::abs(apply(ActivationId::cardioid, {-2, 0})) <= 1e-15);
    CHECK(apply(ActivationId::real_relu, {-1, 3}) == Cplx(0, 0));
    CHECK(apply(ActivationId::real_relu, {2, 3}) == Cplx(2, 0));
  }

  TEST_CASE("ctanh matches std::tanh away from poles and clamps near them") {
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
      Cplx z{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      if (std::abs(std::remainder(z.imag() - kPi / 2, kPi)) < 0.05) continue;
      Cplx a = apply(ActivationId::ctanh, z), b = std::tanh(z);
      CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
    }
    auto e = evaluate(ActivationId::ctanh, {0.0, kPi / 2});
    CHECK(e.clamped);
    CHECK(std::abs(e.value) <= kTanhClamp * (1 + 1e-12));
  }

  TEST_CASE("names round trip") {
    for (auto id : kComplexActivations) CHECK(activation_from_string(to_string(id)) == id);
    CHECK(activation_from_string("real_relu") == ActivationId::real_relu);
    CHECK_THROWS_AS(activation_from_string("gelu"), ConfigError);
  }

  TEST_CASE("cr_residual examples") {
    CHECK(cr_residual(ActivationId::ctanh, {0.5, 0.3}) <= 1e-8);
    CHECK(cr_residual(ActivationId::crelu, {1, -1}) == doctest::Approx(0.5).epsilon(1e-8));
    for (int k = 0; k < 16; ++k) CHECK(cr_residual(ActivationId::siglog, std::polar(1.0, 2 * kPi * k / 16 + 0.1)) > 0.0);
    CHECK_THROWS_AS(cr_residual(ActivationId::crelu, {0.0, 1.0}), FlaggedSample);
    CHECK_THROWS_AS(cr_residual(ActivationId::zrelu, {1.0, 0.0}), FlaggedSample);
  }

  TEST_CASE("cr_residual agrees with the analytic Jacobian") {
    Rng rng(22);
    for (auto id : kComplexActivations) {
      CAPTURE(to_string(id));
      for (int i = 0; i < 100; ++i) {
        Cplx z{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        if (kink_distance(id, z, 0.2) < 1e-2) continue;
        auto ev = evaluate(id, z, 0.2);
        auto w = wirtinger_from_jacobian(ev.jacobian);
        CHECK(std::abs(std::abs(w.d_zbar) - cr_residual(id, z, 0.2)) <= 1e-6 * std::max(1.0, std::abs(w.d_zbar)));
        CHECK(std::abs(ev.value - apply(id, z, bias_for(id, 0.2))) <= 1e-12 * std::max(1.0, std::abs(ev.value)));
      }
    }
  }

  TEST_CASE("phase_equivariance_defect") {
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
      Cplx z = testutil::random_cplx(rng, 2.0);
      double phi = rng.uniform(-kPi, kPi);
      CHECK(phase_equivariance_defect(ActivationId::modrelu, z, phi, rng.normal()) <= 1e-12);
      CHECK(phase_equivariance_defect(ActivationId::siglog, z, phi) <= 1e-12);
      CHECK(phase_equivariance_defect(ActivationId::modrelu, z, phi, 0.0) <= 1e-12);
    }
    // Oracle: direct evaluation of both sides.
    Cplx lhs = apply(ActivationId::crelu, std::polar(1.0, 3 * kPi / 4));
    Cplx rhs = std::polar(1.0, 3 * kPi / 4) * apply(ActivationId::crelu, {1, 0});
    CHECK(phase_equivariance_defect(ActivationId::crelu, {1, 0}, 3 * kPi / 4) == doctest::Approx(std::abs(lhs - rhs)));
    CHECK(phase_equivariance_defect(ActivationId::crelu, {1, 0}, 3 * kPi / 4) ==
          doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
  }

  TEST_CASE("phase-preserving activations keep arg z") {
    Rng rng(24);
    for (int i = 0; i < 300; ++i) {
      Cplx z = testutil::random_cplx(rng, 2.0);
      for (auto [id, b] : {std::pair{ActivationId::cardioid, 0.0}, std::pair{ActivationId::siglog, 0.0},
                           std::pair{ActivationId::modrelu, -0.5}}) {
        Cplx s = apply(id, z, bias_for(id, b));
        if (std::abs(s) < 1e-12) continue;
        CHECK(std::abs(std::remainder(arg(s) - arg(z), 2 * kPi)) <= 1e-10);
      }
    }
  }

  TEST_CASE("first quadrant identity and fixed origin") {
    Rng rng(25);
    for (int i = 0; i < 100; ++i) {
      Cplx z{rng.uniform(1e-3, 3), rng.uniform(1e-3, 3)};
      CHECK(apply(ActivationId::crelu, z) == z);
      CHECK(apply(ActivationId::zrelu, z) == z);
    }
    for (auto id : kComplexActivations) CHECK(apply(id, {0, 0}, bias_for(id)) == Cplx(0, 0));
    CHECK(apply(ActivationId::modrelu, {0, 0}, 1.0) == Cplx(0, 0));
  }

  TEST_CASE("scan_activation on the square grid") {
    auto grid = square_grid();
    CHECK(grid.size() == 121 * 121);
    CHECK(grid.front() == Cplx(-3, -3));
    CHECK(std::abs(grid.back() - Cplx(3, 3)) <= 1e-12);
    for (auto id : kComplexActivations) {
      CAPTURE(to_string(id));
      auto r = scan_activation(id, grid);
      CHECK(r.cr_median <= r.cr_p95);
      CHECK(r.samples > 0);
    }
    auto t = scan_activation(ActivationId::ctanh, grid);
    CHECK(t.cr_median <= 1e-8);
    CHECK_FALSE(t.bounded_on_grid);
    auto s = scan_activation(ActivationId::siglog, grid);
    CHECK(s.bounded_on_grid);
    CHECK(s.cr_median > 0.0);
    for (auto id : {ActivationId::crelu, ActivationId::zrelu, ActivationId::cardioid, ActivationId::modrelu})
      CHECK(scan_activation(id, grid).max_abs <= std::sqrt(18.0) + 1e-12);
  }

  TEST_CASE("trilemma_scan fills gradient statistics") {
    auto grid = square_grid(65, 3.0);
    std::vector<std::uint64_t> seeds{0, 1};
    auto r = trilemma_scan(ActivationId::siglog, grid, seeds);
    CHECK(r.grad_norm_mean > 0.0);
    CHECK(std::isfinite(r.grad_norm_std));
    CHECK(r.bounded_on_grid);
  }

  TEST_CASE("percentile is nearest rank") {
    CHECK(percentile({5, 1, 3, 2, 4}, 0.5) == 3.0);
    CHECK(percentile({5, 1, 3, 2, 4}, 1.0) == 5.0);
    CHECK(percentile({5, 1, 3, 2, 4}, 0.0) == 1.0);
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = 100 - i;
    CHECK(percentile(v, 0.95) == 95.0);
  }

  TEST_CASE("activate tape op matches the pointwise Jacobian") {
    Rng rng(26);
    for (auto id : kComplexActivations) {
      CAPTURE(to_string(id));
      ParamStore p;
      p.add("x", ParamKind::complex_pair, 2 * 6);
      p.add("b", ParamKind::real, 2);
      for (auto& v : p.values("x")) v = rng.normal();
      p.values("b")[0] = 0.1;
      p.values("b")[1] = -0.2;
      auto loss = [&](std::span<const double> theta) {
        ParamStore q = p;
        std::copy(theta.begin(), theta.end(), q.values().begin());
        Tape t;
        auto x = t.parameter(q, "x", {1, 2, 3});
        std::optional<NodeId> b;
        if (id == ActivationId::modrelu) b = t.parameter(q, "b", {2});
        auto y = activate(t, id, x, b);
        auto w = t.constant([] {
          auto c = Tensor::zeros({1, 2, 3}, true);
          for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] = 0.3 + 0.1 * double(i);
          return c;
        }());
        ops::sum(t, ops::real_part(t, ops::mul(t, y, w)));
        return std::pair{t.value(t.size() - 1).data[0], backward(t, q)};
      };
      auto [l0, g] = loss(p.values());
      (void)l0;
      bool near_kink = false;
      for (std::size_t i = 0; i < 6; ++i) {
        Cplx z{p.values("x")[2 * i], p.values("x")[2 * i + 1]};
        near_kink |= kink_distance(id, z, p.values("b")[i / 3]) < 1e-3;
      }
      if (near_kink) continue;
      double err = finite_diff_check([&](std::span<const double> th) { return loss(th).first; },
                                     p.values(), g, 1e-6);
      CHECK(err <= 1e-6);
    }
  }
}
