#pragma once

// Quantum-wavefunction pilot data (hbar = m = 1).

#include <cstdint>
#include <string_view>
#include <vector>

#include "cxbench/cnum.hpp"
#include "cxbench/dataset.hpp"
#include "cxbench/rng.hpp"

namespace cxbench {

inline constexpr std::size_t kGridPoints = 96;
inline constexpr double kDomainHalfWidth = 8.0;
/// Momentum unit; classes are k in {-3, -1, +1, +3} * kappa.
inline constexpr double kMomentumUnit = 1.5;
/// Largest dt * max|V| accepted by split_step_evolve.
inline constexpr double kStabilityGuard = 0.5;
inline constexpr std::size_t kEvolutionSteps = 8;

struct Wavefunction {
  std::vector<Cplx> psi;
  double dx = 2.0 * kDomainHalfWidth / kGridPoints;
  std::uint8_t label = 0;

  /// sqrt(sum |psi|^2 dx).
  double norm() const;
};

/// x_j = -L + j dx, j = 0..n-1.
std::vector<double> grid_points(std::size_t n = kGridPoints, double half_width = kDomainHalfWidth);

/// Normalised A(x) exp(i k x + i phi0) with a Gaussian envelope A.
Wavefunction wavepacket(double center, double width, double k, double phi0,
                        std::size_t n = kGridPoints, double half_width = kDomainHalfWidth);

double momentum_of_class(std::size_t k_class);
/// Random class-independent envelope, k from the class, uniform phi0.
Wavefunction gen_wavepacket(std::size_t k_class, Rng& rng);

enum class PotentialKind { free, harmonic, linear_ramp, square_barrier, double_well };
std::string_view to_string(PotentialKind k) noexcept;

struct PotentialFamily {
  PotentialKind kind = PotentialKind::free;
  double strength = 0.0;  // omega, slope, barrier height or well depth
  double scale = 1.0;     // barrier half-width or well separation

  double operator()(double x) const;
  /// Random strength/scale within the family's range.
  static PotentialFamily sample(PotentialKind kind, Rng& rng);
};

/// Largest |V| any sampled member of any family can reach on the domain.
double max_sampled_potential();
/// Time step used by the pilot datasets.
double default_dt();

/// Strang splitting: half potential phase, kinetic phase in Fourier space,
/// half potential phase; `steps` times. Throws ConfigError when
/// dt * max|V| exceeds kStabilityGuard.
Wavefunction split_step_evolve(const Wavefunction& psi, const PotentialFamily& v, double dt,
                               std::size_t steps);

Wavefunction global_phase(const Wavefunction& psi, double phi);

enum class QuantumTask { momentum, potential_inverse, global_shift, global_aug };
std::string_view to_string(QuantumTask t) noexcept;
QuantumTask quantum_task_from_string(std::string_view name);

struct QuantumPreset {
  std::size_t n_train = 128, n_val = 32, n_test = 64;  // per class
  std::uint64_t seed = 0;
  /// Unseen phase applied to val/test for global_shift.
  double shift_phi = 2.0;
};

/// momentum: 4 classes; potential_inverse: 5 classes evolved from phi0 = 0
/// packets; global_shift / global_aug are potential_inverse with a fixed
/// eval-time phase or a random training phase.
Dataset make_quantum_dataset(QuantumTask task, const QuantumPreset& preset);

}  // namespace cxbench
