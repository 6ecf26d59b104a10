#include "cxbench/eeggen.hpp"

#include <cmath>

#include "cxbench/errors.hpp"

namespace cxbench {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kHalfPi = 1.57079632679489661923;

// Instantaneous phase of an oscillation with frequency f (cycles/step).
std::vector<double> phase_track(double f, double phi0, double walk, Rng& rng) {
  std::vector<double> th(kEegLength);
  double drift = 0.0;
  for (std::size_t t = 0; t < kEegLength; ++t) {
    th[t] = kTwoPi * f * static_cast<double>(t) + phi0 + drift;
    if (walk > 0.0) drift += rng.normal(0.0, walk);
  }
  return th;
}

// Slowly varying class-independent envelope a (1 + 0.1 sin(...)) with jitter.
std::vector<double> envelope(double a, double amp_jitter, Rng& rng) {
  std::vector<double> env(kEegLength);
  const double f = rng.uniform(0.005, 0.02), psi = rng.uniform(0.0, kTwoPi);
  for (std::size_t t = 0; t < kEegLength; ++t) {
    env[t] = a * (1.0 + 0.1 * std::sin(kTwoPi * f * static_cast<double>(t) + psi));
    if (amp_jitter > 0.0) env[t] *= std::max(0.0, 1.0 + rng.normal(0.0, amp_jitter));
  }
  return env;
}

void write_channel(EegSample& s, std::size_t c, const std::vector<double>& env, const std::vector<double>& th) {
  for (std::size_t t = 0; t < kEegLength; ++t) s.channels[c * kEegLength + t] = std::polar(env[t], th[t]);
}

EegSample blank(std::size_t label) {
  if (label >= 4) throw ConfigError("eeg label must be in 0..3");
  EegSample s;
  s.channels.assign(kEegChannels * kEegLength, Cplx(0.0, 0.0));
  s.label = static_cast<std::uint8_t>(label);
  return s;
}

}  // namespace

EegSample gen_phase_locking(std::size_t label, Rng& rng, const EegNoise& noise) {
  EegSample s = blank(label);
  const auto th0 = phase_track(rng.uniform(0.08, 0.12), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng);
  std::vector<double> th1(th0);
  const double lag = static_cast<double>(label) * kHalfPi;
  for (double& v : th1) v += lag + (noise.phase_jitter > 0.0 ? rng.normal(0.0, noise.phase_jitter) : 0.0);
  write_channel(s, 0, envelope(rng.uniform(0.5, 1.5), noise.amp_jitter, rng), th0);
  write_channel(s, 1, envelope(rng.uniform(0.5, 1.5), noise.amp_jitter, rng), th1);
  for (std::size_t c = 2; c < kEegChannels; ++c)
    write_channel(s, c, envelope(rng.uniform(0.5, 1.5), noise.amp_jitter, rng),
                  phase_track(rng.uniform(0.05, 0.2), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng));
  return s;
}

EegSample gen_amplitude_event(std::size_t label, Rng& rng, const EegNoise& noise) {
  EegSample s = blank(label);
  for (std::size_t c = 0; c < kEegChannels; ++c) {
    auto env = envelope(rng.uniform(0.5, 1.0), noise.amp_jitter, rng);
    const auto th = phase_track(rng.uniform(0.05, 0.2), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng);
    if (c == label) {
      const double gain = rng.uniform(2.0, 3.0), t0 = rng.uniform(12.0, 52.0), w = rng.uniform(3.0, 6.0);
      for (std::size_t t = 0; t < kEegLength; ++t) {
        const double u = (static_cast<double>(t) - t0) / w;
        env[t] *= 1.0 + gain * std::exp(-0.5 * u * u);
      }
    }
    write_channel(s, c, env, th);
  }
  return s;
}

EegSample gen_pac(std::size_t label, Rng& rng, const EegNoise& noise) {
  EegSample s = blank(label);
  const double offset = static_cast<double>(label) * kHalfPi;
  // Channel 0: slow rhythm. Channel 1: fast rhythm whose envelope follows the slow phase.
  const auto slow = phase_track(rng.uniform(0.03, 0.05), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng);
  write_channel(s, 0, envelope(rng.uniform(0.8, 1.2), noise.amp_jitter, rng), slow);
  auto fast_env = envelope(rng.uniform(0.8, 1.2), noise.amp_jitter, rng);
  for (std::size_t t = 0; t < kEegLength; ++t) fast_env[t] *= 1.0 + kPacDepth * std::cos(slow[t] + offset);
  write_channel(s, 1, fast_env, phase_track(rng.uniform(0.15, 0.25), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng));
  // Channels 2 and 3: the same pair with an independent, class-free slow phase.
  const auto decoy = phase_track(rng.uniform(0.03, 0.05), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng);
  write_channel(s, 2, envelope(rng.uniform(0.8, 1.2), noise.amp_jitter, rng), decoy);
  auto decoy_env = envelope(rng.uniform(0.8, 1.2), noise.amp_jitter, rng);
  const double decoy_offset = rng.uniform(0.0, kTwoPi);
  const auto decoy_mod = phase_track(rng.uniform(0.03, 0.05), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng);
  for (std::size_t t = 0; t < kEegLength; ++t) decoy_env[t] *= 1.0 + kPacDepth * std::cos(decoy_mod[t] + decoy_offset);
  write_channel(s, 3, decoy_env, phase_track(rng.uniform(0.15, 0.25), rng.uniform(0.0, kTwoPi), noise.phase_walk, rng));
  return s;
}

EegSample reference_shift(const EegSample& s, double phi) {
  EegSample out = s;
  const Cplx r = std::polar(1.0, phi);
  for (Cplx& z : out.channels) z = cmul(r, z);
  return out;
}

std::string_view to_string(EegTask t) noexcept {
  switch (t) {
    case EegTask::phase_locking: return "phase_locking";
    case EegTask::amplitude_event: return "amplitude_event";
    case EegTask::pac: return "pac";
    case EegTask::reference_shift: return "reference_shift";
    case EegTask::reference_aug: return "reference_aug";
  }
  return "?";
}

EegTask eeg_task_from_string(std::string_view name) {
  for (auto t : {EegTask::phase_locking, EegTask::amplitude_event, EegTask::pac, EegTask::reference_shift,
                 EegTask::reference_aug})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown eeg condition: " + std::string(name));
}

void reference_aug(Dataset& ds, Rng& rng) {
  for (auto& seq : ds.train) {
    const Cplx r = std::polar(1.0, rng.uniform(0.0, kTwoPi));
    for (Cplx& z : seq.samples) z = cmul(r, z);
  }
}

Dataset make_eeg_dataset(EegTask task, const EegPreset& preset) {
  Dataset ds;
  ds.domain = "eeg";
  ds.channels = kEegChannels;
  ds.length = kEegLength;
  ds.classes = 4;
  const bool shifted = task == EegTask::reference_shift || task == EegTask::reference_aug;
  switch (task) {
    case EegTask::amplitude_event: ds.class_names = {"burst_ch0", "burst_ch1", "burst_ch2", "burst_ch3"}; break;
    case EegTask::pac: ds.class_names = {"offset_0", "offset_pi/2", "offset_pi", "offset_3pi/2"}; break;
    default: ds.class_names = {"lag_0", "lag_pi/2", "lag_pi", "lag_3pi/2"}; break;
  }
  ds.meta = {{"condition",
              {{"task", std::string(to_string(task))},
               {"seed", preset.seed},
               {"channels", kEegChannels},
               {"T", kEegLength},
               {"noise",
                {{"phase_jitter", preset.noise.phase_jitter},
                 {"phase_walk", preset.noise.phase_walk},
                 {"amp_jitter", preset.noise.amp_jitter}}},
               {"pac_depth", kPacDepth},
               {"shift_phi", shifted ? preset.shift_phi : 0.0},
               {"n_per_class", {{"train", preset.n_train}, {"val", preset.n_val}, {"test", preset.n_test}}}}}};

  const std::size_t counts[3] = {preset.n_train, preset.n_val, preset.n_test};
  std::vector<ComplexSeq>* splits[3] = {&ds.train, &ds.val, &ds.test};
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t c = 0; c < 4; ++c) {
      Rng rng = Rng::stream(mix_seed(preset.seed, 0xEE0 + s), c);
      for (std::size_t i = 0; i < counts[s]; ++i) {
        EegSample x = task == EegTask::amplitude_event ? gen_amplitude_event(c, rng, preset.noise)
                      : task == EegTask::pac           ? gen_pac(c, rng, preset.noise)
                                                       : gen_phase_locking(c, rng, preset.noise);
        if (shifted && s > 0) x = reference_shift(x, preset.shift_phi);
        splits[s]->push_back({std::move(x.channels), x.label});
      }
    }
    Rng order = Rng::stream(mix_seed(preset.seed, 0xEE0 + s), 0x5A0F);
    shuffle(*splits[s], order);
  }
  if (task == EegTask::reference_aug) {
    Rng rng = Rng::stream(preset.seed, 0xA06);
    reference_aug(ds, rng);
  }
  return ds;
}

}  // namespace cxbench
