#include "doctest.h"

#include <cmath>

#include "cxbench/errors.hpp"
#include "cxbench/families.hpp"
#include "cxbench/train.hpp"
#include "cxbench/wirtinger.hpp"
#include "test_util.hpp"

using namespace cxbench;

namespace {

ParamStore one_complex(Cplx w) {
  ParamStore p;
  p.add("w", ParamKind::complex_pair, 2);
  p.values("w")[0] = w.real();
  p.values("w")[1] = w.imag();
  return p;
}

Primitive prim(std::function<Cplx(Cplx)> f) { return {std::move(f), {}}; }

}  // namespace

TEST_SUITE("wirtinger") {
  TEST_CASE("backward on |w|^2 and Re w") {
    auto p = one_complex({1, 2});
    {
      Tape t;
      auto w = t.parameter(p, "w", {1});
      ops::sum(t, ops::abs2(t, w));
      auto g = backward(t, p);
      CHECK(g[0] == doctest::Approx(2.0));
      CHECK(g[1] == doctest::Approx(4.0));
    }
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
      auto q = one_complex(testutil::random_cplx(rng, 3.0));
      Tape t;
      auto w = t.parameter(q, "w", {1});
      ops::sum(t, ops::real_part(t, w));
      auto g = backward(t, q);
      CHECK(g[0] == 1.0);
      CHECK(g[1] == 0.0);
    }
  }

  TEST_CASE("real-pair gradient is twice the conjugate Wirtinger derivative") {
    // L = |w|^2 has dL/d(conj w) = w.
    Rng rng(12);
    for (int i = 0; i < 20; ++i) {
      Cplx w0 = testutil::random_cplx(rng);
      auto p = one_complex(w0);
      Tape t;
      auto w = t.parameter(p, "w", {1});
      ops::sum(t, ops::abs2(t, w));
      auto g = backward(t, p);
      CHECK(std::abs(Cplx(g[0], g[1]) - 2.0 * w0) <= 1e-12);
    }
  }

  TEST_CASE("non-scalar or complex loss is a contract violation") {
    auto p = one_complex({1, 1});
    {
      Tape t;
      t.parameter(p, "w", {1});
      CHECK_THROWS_AS(backward(t, p), ContractViolation);
    }
    {
      ParamStore q;
      q.add("v", ParamKind::real, 3);
      Tape t;
      t.parameter(q, "v", {3});
      CHECK_THROWS_AS(backward(t, q), ContractViolation);
    }
    Tape empty;
    CHECK_THROWS_AS(backward(empty, p), ContractViolation);
  }

  TEST_CASE("wirtinger_pair examples") {
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
      Cplx z = testutil::random_cplx(rng);
      auto id = wirtinger_pair(prim([](Cplx u) { return u; }), z);
      CHECK(std::abs(id.d_z - Cplx(1, 0)) <= 1e-8);
      CHECK(std::abs(id.d_zbar) <= 1e-8);
      auto cj = wirtinger_pair(prim([](Cplx u) { return std::conj(u); }), z);
      CHECK(std::abs(cj.d_z) <= 1e-8);
      CHECK(std::abs(cj.d_zbar - Cplx(1, 0)) <= 1e-8);
    }
    auto sq = wirtinger_pair(prim([](Cplx u) { return u * u; }), {1, 1});
    CHECK(std::abs(sq.d_z - Cplx(2, 2)) <= 1e-8);
    CHECK(std::abs(sq.d_zbar) <= 1e-8);
  }

  TEST_CASE("wirtinger_pair flags samples near a kink") {
    Primitive f{[](Cplx u) { return Cplx(std::max(u.real(), 0.0), 0.0); },
                [](Cplx u) { return std::abs(u.real()); }};
    CHECK_THROWS_AS(wirtinger_pair(f, {1e-4, 0.3}), FlaggedSample);
    CHECK_NOTHROW(wirtinger_pair(f, {0.5, 0.3}));
  }

  TEST_CASE("wirtinger_from_jacobian matches the numerical pair") {
    Rng rng(14);
    auto f = [](Cplx u) { return u * std::conj(u) * u + std::conj(u); };
    for (int i = 0; i < 20; ++i) {
      Cplx z = testutil::random_cplx(rng);
      const double h = 1e-6;
      Cplx fx = (f(z + Cplx(h, 0)) - f(z - Cplx(h, 0))) / (2 * h);
      Cplx fy = (f(z + Cplx(0, h)) - f(z - Cplx(0, h))) / (2 * h);
      auto a = wirtinger_from_jacobian({fx.real(), fy.real(), fx.imag(), fy.imag()});
      auto b = wirtinger_pair(prim(f), z);
      CHECK(std::abs(a.d_z - b.d_z) <= 1e-9);
      CHECK(std::abs(a.d_zbar - b.d_zbar) <= 1e-9);
      // Analytic: f = z^2 conj z + conj z, df/dz = 2 z conj z, df/dconj z = z^2 + 1.
      CHECK(std::abs(b.d_z - 2.0 * z * std::conj(z)) <= 1e-7);
      CHECK(std::abs(b.d_zbar - (z * z + 1.0)) <= 1e-7);
    }
  }

  TEST_CASE("holomorphic primitives have vanishing d_zbar") {
    const std::function<Cplx(Cplx)> fs[] = {
        [](Cplx u) { return u * u; }, [](Cplx u) { return std::exp(u); },
        [](Cplx u) { return std::tanh(u); }};
    for (double x = -2.0; x <= 2.0; x += 0.25)
      for (double y = -2.0; y <= 2.0; y += 0.25) {
        Cplx z{x, y};
        for (std::size_t k = 0; k < 3; ++k) {
          if (k == 2 && std::abs(std::remainder(y - M_PI / 2, M_PI)) < 0.5) continue;
          CHECK(std::abs(wirtinger_pair(prim(fs[k]), z).d_zbar) <= 1e-8);
        }
      }
  }

  TEST_CASE("finite_diff_check is exact on a quadratic") {
    // L(w) = sum_i (a_i w_i - b_i)^2 + (w_0 w_1).
    ParamStore p;
    p.add("w", ParamKind::real, 5);
    Rng rng(15);
    std::vector<double> a(5), b(5);
    for (auto& v : p.values()) v = rng.normal();
    for (std::size_t i = 0; i < 5; ++i) a[i] = rng.normal(), b[i] = rng.normal();
    auto loss = [&](std::span<const double> w) {
      double s = w[0] * w[1];
      for (std::size_t i = 0; i < 5; ++i) s += (a[i] * w[i] - b[i]) * (a[i] * w[i] - b[i]);
      return s;
    };
    std::vector<double> g(5);
    const auto& w = p.values();
    for (std::size_t i = 0; i < 5; ++i) g[i] = 2 * a[i] * (a[i] * w[i] - b[i]);
    g[0] += w[1];
    g[1] += w[0];
    CHECK(finite_diff_check(loss, w, g, 1e-3) <= 1e-10);
  }

  TEST_CASE("backward agrees with finite differences on small networks") {
    const std::pair<Family, ActivationId> cases[] = {
        {Family::complex, ActivationId::modrelu}, {Family::complex, ActivationId::crelu},
        {Family::complex, ActivationId::cardioid}, {Family::real_stacked, ActivationId::crelu}};
    Rng rng(16);
    for (auto [fam, act] : cases) {
      CAPTURE(to_string(fam));
      CAPTURE(to_string(act));
      auto spec = FamilySpec::of(fam, act, 4, 1, 24, 3);
      auto model = Model::build(spec);
      auto x = testutil::random_input(model, 3, rng);
      auto p = testutil::params_off_kinks(model, x, 100);
      std::vector<std::size_t> labels{0, 1, 2};
      CHECK(model_gradient_check(model, p, x, labels, 1e-6) <= 1e-4);
    }
  }

  TEST_CASE("gradient of a sum is the sum of gradients") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      ParamStore p;
      p.add("a", ParamKind::complex_pair, 8);
      p.add("b", ParamKind::complex_pair, 8);
      for (auto& v : p.values()) v = rng.normal();
      auto build = [&](Tape& t, int which) {
        auto a = t.parameter(p, "a", {4});
        auto b = t.parameter(p, "b", {4});
        auto f = ops::abs2(t, ops::mul(t, a, b));
        auto g = ops::real_part(t, ops::mul(t, a, a));
        if (which == 0) return ops::sum(t, f);
        if (which == 1) return ops::sum(t, g);
        return ops::sum(t, ops::add(t, f, g));
      };
      std::vector<double> gs[3];
      for (int k = 0; k < 3; ++k) {
        Tape t;
        build(t, k);
        gs[k] = backward(t, p);
      }
      for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(gs[2][i] - gs[0][i] - gs[1][i]) <= 1e-12);
    }
  }

  TEST_CASE("backward is deterministic") {
    auto model = Model::build(FamilySpec::of(Family::complex, ActivationId::siglog, 6, 2, 32, 4));
    Rng rng(18);
    auto x = testutil::random_input(model, 4, rng);
    auto p = model.init_params(3);
    std::vector<std::size_t> labels{0, 1, 2, 3};
    std::vector<double> first;
    for (int k = 0; k < 3; ++k) {
      Tape t;
      cross_entropy_loss(t, model.forward(t, p, x), labels);
      auto g = backward(t, p);
      if (k == 0) first = g;
      else CHECK(g == first);
    }
  }

  TEST_CASE("ParamStore layout") {
    ParamStore p;
    p.add("a", ParamKind::real, 3);
    p.add("b", ParamKind::complex_pair, 4);
    CHECK(p.size() == 7);
    CHECK(p.entry("b").offset == 3);
    CHECK(p.contains("a"));
    CHECK_FALSE(p.contains("c"));
    CHECK_THROWS(p.add("a", ParamKind::real, 1));
    CHECK_THROWS(p.add("odd", ParamKind::complex_pair, 3));
  }
}
