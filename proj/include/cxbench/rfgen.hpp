#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cxbench/cnum.hpp"
#include "cxbench/dataset.hpp"
#include "cxbench/rng.hpp"

namespace cxbench {

enum class Modulation { bpsk, qpsk, psk8, qam16, qam32, qam64 };
std::string_view to_string(Modulation m) noexcept;

enum class RfTask {
  psk_only,
  qam_only,
  mixed,
  low_snr_psk,
  high_snr_psk,
  unit_mag_mixed,
  fixed_rotation_psk,
  rotation_aug_psk,
  awgn_replication
};
std::string_view to_string(RfTask t) noexcept;
RfTask rf_task_from_string(std::string_view name);
/// The eight stress conditions in table order.
inline constexpr RfTask kStressConditions[] = {
    RfTask::psk_only,       RfTask::qam_only,           RfTask::mixed,
    RfTask::low_snr_psk,    RfTask::high_snr_psk,       RfTask::unit_mag_mixed,
    RfTask::fixed_rotation_psk, RfTask::rotation_aug_psk};

enum class Normalization { unit_power, unit_magnitude };
enum class RotationKind { none, fixed, random_per_sample };

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultRotation = kPi / 3.0;
inline constexpr double kReplicationSnrs[] = {-10, -6, -2, 2, 6, 10, 14, 18};

struct RfCondition {
  RfTask task = RfTask::psk_only;
  /// One value = fixed SNR; several = drawn uniformly per sample.
  std::vector<double> snr_db{10.0};
  Normalization normalization = Normalization::unit_power;
  /// Training-split rotation; val/test use `test_rotation`.
  RotationKind rotation = RotationKind::none;
  RotationKind test_rotation = RotationKind::none;
  double phi = kDefaultRotation;
  std::size_t length = 128;
  std::uint64_t seed = 0;
  std::size_t n_train = 256, n_val = 64, n_test = 64;  // per class

  /// Defaults for a task (class set, SNR, normalization, rotation).
  static RfCondition defaults(RfTask task, std::uint64_t seed = 0);
  void validate() const;
  nlohmann::json to_json() const;
};

std::vector<Modulation> class_set(RfTask task);

/// Unit-mean-power constellation of a modulation.
std::vector<Cplx> constellation(Modulation m);
/// n i.i.d. uniform points of the constellation.
std::vector<Cplx> gen_symbols(Modulation m, std::size_t n, Rng& rng);
/// Circular Gaussian noise of variance 10^(-snr/10), split evenly over re/im.
std::vector<Cplx> add_awgn(std::span<const Cplx> x, double snr_db, Rng& rng);
/// Throws DegenerateInput on an all-zero sequence.
std::vector<Cplx> normalize(std::span<const Cplx> x, Normalization mode);

Dataset make_dataset(const RfCondition& cond);

}  // namespace cxbench
