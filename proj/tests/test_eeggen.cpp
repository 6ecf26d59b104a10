#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cxbench/eeggen.hpp"
#include "cxbench/errors.hpp"
#include "test_util.hpp"

using namespace cxbench;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;
constexpr std::size_t T = kEegLength;

Cplx at(const std::vector<Cplx>& ch, std::size_t c, std::size_t t) { return ch[c * T + t]; }

std::size_t nearest_lag_class(double angle) {
  const long q = std::lround(angle / kHalfPi);
  return std::size_t(((q % 4) + 4) % 4);
}

// Circular mean of theta_1 - theta_0.
std::size_t circular_mean_oracle(const std::vector<Cplx>& ch) {
  Cplx acc{};
  for (std::size_t t = 0; t < T; ++t) {
    const Cplx d = at(ch, 1, t) * std::conj(at(ch, 0, t));
    acc += d / std::abs(d);
  }
  return nearest_lag_class(std::arg(acc));
}

std::size_t peak_oracle(const std::vector<Cplx>& ch) {
  std::size_t best = 0;
  double peak = -1.0;
  for (std::size_t c = 0; c < kEegChannels; ++c)
    for (std::size_t t = 0; t < T; ++t)
      if (std::abs(at(ch, c, t)) > peak) peak = std::abs(at(ch, c, t)), best = c;
  return best;
}

// Phase-binned amplitude statistic: the offset o maximising sum |z_1| cos(theta_0 + o).
std::size_t pac_oracle(const std::vector<Cplx>& ch) {
  std::size_t best = 0;
  double score = -INFINITY;
  for (std::size_t o = 0; o < 4; ++o) {
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) s += std::abs(at(ch, 1, t)) * std::cos(std::arg(at(ch, 0, t)) + double(o) * kHalfPi);
    if (s > score) score = s, best = o;
  }
  return best;
}

enum class Nuisance { magnitude, phase };

std::vector<double> features(const std::vector<Cplx>& ch, Nuisance n) {
  std::vector<double> f;
  for (Cplx z : ch) {
    if (n == Nuisance::magnitude) {
      f.push_back(std::abs(z));
    } else {
      const double r = std::abs(z);
      f.push_back(r > 0 ? z.real() / r : 1.0);
      f.push_back(r > 0 ? z.imag() / r : 0.0);
    }
  }
  return f;
}

// Nearest-centroid classifier trained on one view of the training split.
double nearest_centroid_accuracy(const Dataset& ds, Nuisance n) {
  std::vector<std::vector<double>> centroid(ds.classes);
  std::vector<double> count(ds.classes);
  for (auto& s : ds.train) {
    auto f = features(s.samples, n);
    auto& c = centroid[s.label];
    if (c.empty()) c.assign(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) c[i] += f[i];
    ++count[s.label];
  }
  for (std::size_t k = 0; k < ds.classes; ++k)
    for (double& v : centroid[k]) v /= count[k];
  std::size_t correct = 0;
  for (auto& s : ds.test) {
    auto f = features(s.samples, n);
    std::size_t best = 0;
    double bd = INFINITY;
    for (std::size_t k = 0; k < ds.classes; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) d += (f[i] - centroid[k][i]) * (f[i] - centroid[k][i]);
      if (d < bd) bd = d, best = k;
    }
    correct += best == s.label;
  }
  return double(correct) / double(ds.test.size());
}

}  // namespace

TEST_SUITE("eeggen") {
  TEST_CASE("zero lag without jitter") {
    Rng rng(81);
    for (int i = 0; i < 10; ++i) {
      auto s = gen_phase_locking(0, rng, EegNoise::clean());
      CHECK(s.channels.size() == kEegChannels * T);
      for (std::size_t t = 0; t < T; ++t)
        CHECK(std::abs(std::remainder(std::arg(at(s.channels, 1, t)) - std::arg(at(s.channels, 0, t)), 2 * std::numbers::pi)) <= 1e-12);
    }
    CHECK_THROWS_AS(gen_phase_locking(4, rng), ConfigError);
  }

  TEST_CASE("informative statistics solve clean data") {
    Rng rng(82);
    for (std::size_t label = 0; label < 4; ++label)
      for (int i = 0; i < 50; ++i) {
        CHECK(circular_mean_oracle(gen_phase_locking(label, rng, EegNoise::clean()).channels) == label);
        CHECK(peak_oracle(gen_amplitude_event(label, rng, EegNoise::clean()).channels) == label);
        CHECK(pac_oracle(gen_pac(label, rng, EegNoise::clean()).channels) == label);
      }
  }

  TEST_CASE("burst peak is at least twice the baseline envelope") {
    Rng rng(83);
    for (std::size_t label = 0; label < 4; ++label)
      for (int i = 0; i < 25; ++i) {
        auto s = gen_amplitude_event(label, rng, EegNoise::clean());
        std::vector<double> env(T);
        for (std::size_t t = 0; t < T; ++t) env[t] = std::abs(at(s.channels, label, t));
        const double peak = *std::max_element(env.begin(), env.end());
        std::nth_element(env.begin(), env.begin() + T / 2, env.end());
        CHECK(peak >= 2.0 * env[T / 2]);
      }
  }

  TEST_CASE("analytic-signal form") {
    Rng rng(84);
    for (auto s : {gen_phase_locking(1, rng), gen_amplitude_event(2, rng), gen_pac(3, rng)}) {
      for (Cplx z : s.channels) CHECK(std::isfinite(std::abs(z)));
      for (std::size_t c = 0; c < kEegChannels; ++c)
        for (std::size_t t = 1; t < T; ++t) {
          // Consecutive phase increments stay well below pi: phase is continuous at this sampling.
          const double d = std::arg(at(s.channels, c, t) * std::conj(at(s.channels, c, t - 1)));
          CHECK(std::abs(d) < 2.5);
        }
    }
  }

  TEST_CASE("reference shift") {
    Rng rng(85);
    auto s = gen_phase_locking(2, rng);
    CHECK(reference_shift(s, 0.0).channels == s.channels);
    auto r = reference_shift(s, 1.3);
    for (std::size_t i = 0; i < s.channels.size(); ++i) CHECK(std::abs(std::abs(r.channels[i]) - std::abs(s.channels[i])) <= 1e-12);
    for (std::size_t t = 0; t < T; ++t) {
      const Cplx d0 = at(s.channels, 1, t) * std::conj(at(s.channels, 0, t));
      const Cplx d1 = at(r.channels, 1, t) * std::conj(at(r.channels, 0, t));
      CHECK(std::abs(d0 - d1) <= 1e-12);
    }
    auto clean = gen_phase_locking(3, rng, EegNoise::clean());
    CHECK(circular_mean_oracle(reference_shift(clean, 2.0).channels) == 3);
  }

  TEST_CASE("datasets") {
    EegPreset p;
    p.n_train = 16, p.n_val = 4, p.n_test = 8, p.seed = 5;
    for (auto task : {EegTask::phase_locking, EegTask::amplitude_event, EegTask::pac, EegTask::reference_shift, EegTask::reference_aug}) {
      CAPTURE(to_string(task));
      CHECK(eeg_task_from_string(to_string(task)) == task);
      auto ds = make_eeg_dataset(task, p);
      CHECK(ds.classes == 4);
      CHECK(ds.channels == 4);
      CHECK(ds.length == 64);
      std::vector<int> counts(4);
      for (auto& s : ds.test) ++counts[s.label];
      for (int c : counts) CHECK(c == 8);
      auto again = make_eeg_dataset(task, p);
      CHECK(again.train[7].samples == ds.train[7].samples);
    }
    auto base = make_eeg_dataset(EegTask::phase_locking, p);
    auto shift = make_eeg_dataset(EegTask::reference_shift, p);
    CHECK(base.train[0].samples == shift.train[0].samples);
    const Cplx e = std::polar(1.0, p.shift_phi);
    for (std::size_t i = 0; i < base.test[0].samples.size(); ++i)
      CHECK(std::abs(shift.test[0].samples[i] - e * base.test[0].samples[i]) <= 1e-12);
  }

  TEST_CASE("nuisance views sit at chance") {
    EegPreset p;
    p.seed = 11;
    auto within = [](double acc) { return std::abs(acc - 0.25) <= 0.07; };
    auto pl = make_eeg_dataset(EegTask::phase_locking, p);
    CHECK(within(nearest_centroid_accuracy(pl, Nuisance::magnitude)));
    auto ae = make_eeg_dataset(EegTask::amplitude_event, p);
    CHECK(within(nearest_centroid_accuracy(ae, Nuisance::phase)));
    auto pac = make_eeg_dataset(EegTask::pac, p);
    CHECK(within(nearest_centroid_accuracy(pac, Nuisance::magnitude)));
    CHECK(within(nearest_centroid_accuracy(pac, Nuisance::phase)));
  }
}
