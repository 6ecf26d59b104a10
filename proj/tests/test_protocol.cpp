#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <numbers>
#include <stdexcept>

#include "cxbench/errors.hpp"
#include "cxbench/protocol.hpp"
#include "cxbench/rfgen.hpp"
#include "test_util.hpp"

using namespace cxbench;

namespace {

// Student-t upper quantile by Simpson integration of the density and bisection.
double t_cdf(double x, double nu) {
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * std::numbers::pi);
  auto pdf = [&](double t) { return c * std::pow(1 + t * t / nu, -(nu + 1) / 2); };
  const int n = 20000;
  const double h = x / n;
  double s = pdf(0) + pdf(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return 0.5 + s * h / 3;
}

double t_quantile(double p, double nu) {
  double lo = 0, hi = 100;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, nu) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

const Family kFams[] = {Family::complex, Family::real_stacked, Family::real_param_matched,
                        Family::real_flop_matched};

// Full grid: val/test accuracy supplied per (family, trial, seed).
template <class F>
std::vector<SweepRecord> grid(std::size_t trials, std::size_t seeds, F acc) {
  std::vector<SweepRecord> out;
  for (Family f : kFams)
    for (std::size_t t = 0; t < trials; ++t)
      for (std::size_t s = 0; s < seeds; ++s) {
        SweepRecord r;
        r.condition = "fixture";
        r.family = f;
        r.trial = t;
        r.seed = s;
        r.lr = 1e-3 * double(t + 1);
        r.val_accuracy = acc(f, t, s);
        r.test_accuracy = r.val_accuracy - 0.01 * double(s);
        r.dead = r.val_accuracy < 0.4;
        out.push_back(r);
      }
  return out;
}

}  // namespace

TEST_SUITE("protocol") {
  TEST_CASE("search space") {
    for (std::uint64_t seed : {0ull, 1ull, 7ull, 12345ull}) {
      const auto a = build_search_space(seed), b = build_search_space(seed);
      REQUIRE(a.trials.size() == kTrialCount);
      bool hi = false, lo = false;
      for (std::size_t i = 0; i < kTrialCount; ++i) {
        const Trial& t = a.trials[i];
        CHECK(t.index == i);
        CHECK(t.lr == b.trials[i].lr);
        CHECK(t.width == b.trials[i].width);
        CHECK(t.lr >= kLrMin);
        CHECK(t.lr <= kLrMax);
        CHECK(std::ranges::find(kWidthChoices, t.width) != std::end(kWidthChoices));
        CHECK(std::ranges::find(kBatchChoices, t.batch_size) != std::end(kBatchChoices));
        CHECK(std::ranges::find(kWeightDecayChoices, t.weight_decay) != std::end(kWeightDecayChoices));
        hi |= t.lr >= kUnstableLr;
        lo |= t.lr <= kStableLr;
      }
      CHECK(hi);
      CHECK(lo);
    }
    CHECK(build_search_space(1).trials[0].lr != build_search_space(2).trials[0].lr);
    TrainConfig cfg;
    const Trial t{3, 0.02, 64, 128, 1e-3};
    t.apply(cfg);
    CHECK(cfg.lr == 0.02);
    CHECK(cfg.width == 64);
    CHECK(cfg.batch_size == 128);
    CHECK(cfg.weight_decay == 1e-3);
  }

  TEST_CASE("selection rules diverge when peaks differ") {
    // complex peaks at trial 3; every real family peaks at trial 7 and collapses at 3.
    auto recs = grid(10, 3, [](Family f, std::size_t t, std::size_t s) {
      if (f == Family::complex) return t == 3 ? 0.9 : 0.6 + 0.001 * double(s);
      if (t == 7) return 0.85;
      if (t == 3) return 0.35;
      return 0.6;
    });
    const auto m = select(recs, SelectionRule::matched_shared);
    const auto i = select(recs, SelectionRule::independent);
    CHECK(m.anchor_trial == 3);
    CHECK(i.anchor_trial == 3);
    for (const auto& fs : m.families) CHECK(fs.trial == 3);
    for (const auto& fs : i.families) CHECK(fs.trial == (fs.family == Family::complex ? 3u : 7u));
    CHECK(m.complex_score == i.complex_score);
    CHECK(m.gap == doctest::Approx(0.9 - 0.35));
    CHECK(i.gap == doctest::Approx(0.9 - 0.85));
    CHECK(m.gap > i.gap);
    CHECK(m.real_dead == 9);
    CHECK(m.real_runs == 9);
    CHECK(i.real_dead == 0);
    REQUIRE(m.gaps.size() == 3);
    for (const auto& g : m.gaps) {
      CHECK(g.pairs == 3);
      CHECK(g.mean == doctest::Approx(0.55));
      CHECK(g.half_width == doctest::Approx(0.0).epsilon(1e-12));
    }
    const auto fam = std::ranges::find(m.families, Family::real_stacked, &FamilySelection::family);
    REQUIRE(fam != m.families.end());
    CHECK(fam->mean_test == doctest::Approx(0.35 - 0.01));
    CHECK(fam->std_test == doctest::Approx(0.01));
  }

  TEST_CASE("shared peak: rules agree") {
    auto recs = grid(6, 2, [](Family f, std::size_t t, std::size_t) {
      return t == 2 ? (f == Family::complex ? 0.8 : 0.7) : 0.5;
    });
    const auto m = select(recs, SelectionRule::matched_shared);
    const auto i = select(recs, SelectionRule::independent);
    CHECK(m.gap == i.gap);
    CHECK(m.complex_score == i.complex_score);
    for (std::size_t k = 0; k < m.families.size(); ++k) CHECK(m.families[k].trial == i.families[k].trial);
  }

  TEST_CASE("ties go to the lower trial") {
    auto recs = grid(4, 2, [](Family, std::size_t t, std::size_t) { return t == 1 || t == 3 ? 0.7 : 0.5; });
    CHECK(select(recs, SelectionRule::independent).anchor_trial == 1);
  }

  TEST_CASE("selection is permutation invariant") {
    auto recs = grid(8, 3, [](Family f, std::size_t t, std::size_t s) {
      return 0.4 + 0.05 * double((t * 7 + s * 3 + static_cast<std::size_t>(f)) % 9);
    });
    const auto ref_m = to_json(select(recs, SelectionRule::matched_shared));
    const auto ref_i = to_json(select(recs, SelectionRule::independent));
    std::mt19937_64 rng(99);
    for (int k = 0; k < 20; ++k) {
      std::ranges::shuffle(recs, rng);
      CHECK(to_json(select(recs, SelectionRule::matched_shared)) == ref_m);
      CHECK(to_json(select(recs, SelectionRule::independent)) == ref_i);
    }
  }

  TEST_CASE("incomplete or malformed grids") {
    auto base = grid(3, 2, [](Family, std::size_t, std::size_t) { return 0.5; });
    auto holes = base;
    holes.erase(holes.begin() + 4);
    CHECK_THROWS_AS(select(holes, SelectionRule::matched_shared), ProtocolError);
    auto dup = base;
    dup.push_back(dup[5]);
    CHECK_THROWS_AS(select(dup, SelectionRule::independent), ProtocolError);
    auto no_cx = base;
    std::erase_if(no_cx, [](const SweepRecord& r) { return r.family == Family::complex; });
    CHECK_THROWS_AS(select(no_cx, SelectionRule::matched_shared), ProtocolError);
    auto mixed = base;
    mixed[0].condition = "other";
    CHECK_THROWS_AS(select(mixed, SelectionRule::matched_shared), ProtocolError);
    CHECK_THROWS_AS(select(std::vector<SweepRecord>{}, SelectionRule::matched_shared), ProtocolError);
    try {
      select(holes, SelectionRule::matched_shared);
    } catch (const ProtocolError& e) {
      CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
  }

  TEST_CASE("paired_ci") {
    const double d[] = {1, 2, 3};
    const auto ci = paired_ci(d);
    CHECK(ci.mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(ci.half_width - 2.484) <= 1e-3);

    Rng rng(5);
    for (std::size_t n : {2, 3, 4, 6, 10, 25}) {
      std::vector<double> v(n);
      for (double& x : v) x = rng.normal(0.1, 0.3);
      double m = 0;
      for (double x : v) m += x;
      m /= double(n);
      double ss = 0;
      for (double x : v) ss += (x - m) * (x - m);
      const double want = t_quantile(0.975, double(n - 1)) * std::sqrt(ss / double(n - 1)) / std::sqrt(double(n));
      const auto got = paired_ci(v);
      CHECK(std::abs(got.mean - m) <= 1e-12);
      CHECK(std::abs(got.half_width - want) <= 1e-9);
    }
    const double zeros[] = {0, 0, 0, 0};
    CHECK(paired_ci(zeros).mean == 0.0);
    CHECK(paired_ci(zeros).half_width == 0.0);
    const double consts[] = {0.3, 0.3, 0.3};
    CHECK(paired_ci(consts).mean == doctest::Approx(0.3));
    CHECK(paired_ci(consts).half_width <= 1e-15);
    const double one[] = {1.0};
    CHECK_THROWS_AS(paired_ci(one), StatsError);
    CHECK_THROWS_AS(paired_ci(std::span<const double>{}), StatsError);
  }

  TEST_CASE("paired_ci scales and shifts") {
    Rng rng(17);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> v(2 + rng.below(8));
      for (double& x : v) x = rng.normal(0, 1);
      const double a = rng.uniform(0.1, 5), b = rng.uniform(-2, 2);
      std::vector<double> w;
      for (double x : v) w.push_back(a * x + b);
      const auto p = paired_ci(v), q = paired_ci(w);
      CHECK(q.mean == doctest::Approx(a * p.mean + b).epsilon(1e-10));
      CHECK(q.half_width == doctest::Approx(a * p.half_width).epsilon(1e-10));
    }
  }

  TEST_CASE("dead tally") {
    std::vector<SweepRecord> recs(12);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      recs[i].family = i < 3 ? Family::complex : kRealTelemetryFamilies[i % 3];
      recs[i].dead = i >= 3;
    }
    auto real = [](const SweepRecord& r) { return !is_complex_family(r.family); };
    const auto t = dead_tally(recs, real);
    CHECK(t.dead == 9);
    CHECK(t.total == 9);
    for (auto& r : recs) r.dead = false;
    CHECK(dead_tally(recs, real).dead == 0);
    CHECK(dead_tally(recs, real).total == 9);
    CHECK(dead_tally(recs, nullptr).total == 12);
  }

  TEST_CASE("records csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "cxbench_protocol_csv";
    std::filesystem::create_directories(dir);
    auto recs = grid(2, 2, [](Family, std::size_t t, std::size_t s) { return 0.25 + 0.125 * double(t + s); });
    recs[1].condition = "";
    recs[2].activation = ActivationId::modrelu;
    recs[3].step1_head_grad = 31.5;
    recs[3].width = 96;
    recs[3].param_count = 12867;
    recs[4].seed = 0xFFFFFFFFFFull;
    write_records_csv(recs, dir / "r.csv");
    const auto back = read_records_csv(dir / "r.csv");
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(back[i].condition == recs[i].condition);
      CHECK(back[i].family == recs[i].family);
      CHECK(back[i].activation == recs[i].activation);
      CHECK(back[i].trial == recs[i].trial);
      CHECK(back[i].seed == recs[i].seed);
      CHECK(back[i].lr == doctest::Approx(recs[i].lr));
      CHECK(back[i].val_accuracy == doctest::Approx(recs[i].val_accuracy));
      CHECK(back[i].test_accuracy == doctest::Approx(recs[i].test_accuracy));
      CHECK(back[i].dead == recs[i].dead);
      CHECK(back[i].step1_head_grad == doctest::Approx(recs[i].step1_head_grad));
      CHECK(back[i].width == recs[i].width);
      CHECK(back[i].param_count == recs[i].param_count);
    }
    {
      std::ofstream f(dir / "bad.csv");
      f << "nope\n";
    }
    CHECK_THROWS_AS(read_records_csv(dir / "bad.csv"), ProtocolError);
    CHECK_THROWS_AS(read_records_csv(dir / "absent.csv"), ProtocolError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("run_parallel") {
    for (std::size_t jobs : {1, 2, 4, 64}) {
      std::vector<std::atomic<int>> hits(37);
      run_parallel(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
      for (auto& h : hits) CHECK(h.load() == 1);
    }
    run_parallel(0, 3, [](std::size_t) { FAIL("called"); });
    for (std::size_t jobs : {1, 3})
      CHECK_THROWS_AS(run_parallel(10, jobs,
                                   [](std::size_t i) {
                                     if (i == 4) throw std::out_of_range("boom");
                                   }),
                      std::out_of_range);
  }

  TEST_CASE("to_json keys") {
    auto recs = grid(2, 2, [](Family, std::size_t t, std::size_t) { return 0.5 + 0.1 * double(t); });
    const auto j = to_json(select(recs, SelectionRule::independent));
    for (const char* k : {"rule", "anchor_trial", "families", "gaps", "complex", "best_real", "best_real_score", "gap",
                          "real_dead", "real_runs"})
      CHECK(j.contains(k));
    CHECK(j["rule"] == "independent");
    CHECK(j["families"].size() == 4);
    CHECK(j["gaps"].size() == 3);
  }

  TEST_CASE("factorial smoke") {
    auto c = RfCondition::defaults(RfTask::psk_only, 3);
    c.n_train = 8;
    c.n_val = 4;
    c.n_test = 4;
    c.length = 32;
    const Dataset ds = make_dataset(c);
    FactorialConfig fc;
    fc.base.width = 16;
    fc.base.steps = 3;
    fc.base.batch_size = 12;
    fc.activations = {ActivationId::crelu};
    fc.lrs = {0.02, 0.002};
    fc.seeds = {0, 1};
    const auto a = factorial(ds, fc);
    fc.jobs = 3;
    const auto b = factorial(ds, fc);
    REQUIRE(a.cells.size() == 2);
    REQUIRE(a.records.size() == 2 * 3 * 2);
    for (const auto& cell : a.cells) CHECK(cell.total == 6);
    CHECK(a.cells[0].lr == 0.02);
    CHECK(a.cells[1].lr == 0.002);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(!is_complex_family(a.records[i].family));
      CHECK(a.records[i].step1_head_grad == b.records[i].step1_head_grad);
      CHECK(a.records[i].test_accuracy == b.records[i].test_accuracy);
    }
    for (const auto& cell : a.cells) {
      double mx = 0;
      for (const auto& r : a.records)
        if (r.lr == cell.lr) mx = std::max(mx, r.step1_head_grad);
      CHECK(cell.max_step1_head_grad == mx);
    }
  }
}
