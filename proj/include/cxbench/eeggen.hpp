#pragma once

// Synthetic analytic-signal EEG pilot data: 4 channels x 64 steps, 4 classes.
// Signals are generated directly as complex oscillations with envelopes.

#include <cstdint>
#include <string_view>
#include <vector>

#include "cxbench/dataset.hpp"
#include "cxbench/rng.hpp"

namespace cxbench {

inline constexpr std::size_t kEegChannels = 4;
inline constexpr std::size_t kEegLength = 64;
inline constexpr double kPacDepth = 0.8;

struct EegNoise {
  double phase_jitter = 0.15;  // i.i.d. per-sample phase noise on the lagged channel (rad)
  double phase_walk = 0.03;    // random-walk increment of every instantaneous phase (rad/step)
  double amp_jitter = 0.05;    // multiplicative envelope noise
  static EegNoise clean() { return {0.0, 0.0, 0.0}; }
};

struct EegSample {
  std::vector<Cplx> channels;  // [4 x 64]
  std::uint8_t label = 0;
};

/// Lag class*pi/2 between the phases of channels 1 and 0.
EegSample gen_phase_locking(std::size_t label, Rng& rng, const EegNoise& noise = {});
/// Gaussian amplitude burst on channel `label`.
EegSample gen_amplitude_event(std::size_t label, Rng& rng, const EegNoise& noise = {});
/// Channel 1 envelope A0 (1 + 0.8 cos(theta_slow + label*pi/2)), theta_slow the phase of channel 0.
EegSample gen_pac(std::size_t label, Rng& rng, const EegNoise& noise = {});

EegSample reference_shift(const EegSample& s, double phi);

enum class EegTask { phase_locking, amplitude_event, pac, reference_shift, reference_aug };
std::string_view to_string(EegTask t) noexcept;
EegTask eeg_task_from_string(std::string_view name);

struct EegPreset {
  std::size_t n_train = 128, n_val = 32, n_test = 64;  // per class
  std::uint64_t seed = 0;
  EegNoise noise{};
  double shift_phi = 2.0;  // reference phase for reference_shift / reference_aug eval splits
};

/// reference_shift / reference_aug are the phase-locking task with a fixed
/// eval-time reference phase, the latter also rotating each training sample
/// by a fresh uniform phase.
Dataset make_eeg_dataset(EegTask task, const EegPreset& preset);

/// Training split rotated by a fresh uniform phase per sample.
void reference_aug(Dataset& ds, Rng& rng);

}  // namespace cxbench
