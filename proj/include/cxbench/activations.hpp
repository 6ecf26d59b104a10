#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cxbench/cnum.hpp"
#include "cxbench/wirtinger.hpp"

namespace cxbench {

enum class ActivationId { crelu, zrelu, modrelu, cardioid, siglog, ctanh, real_relu };

/// The six complex activations in their canonical order.
inline constexpr ActivationId kComplexActivations[] = {
    ActivationId::crelu,    ActivationId::zrelu,  ActivationId::modrelu,
    ActivationId::cardioid, ActivationId::siglog, ActivationId::ctanh};

std::string_view to_string(ActivationId id) noexcept;
ActivationId activation_from_string(std::string_view name);

/// ctanh outputs are clamped to this magnitude near the poles at i(pi/2 + n pi).
inline constexpr double kTanhClamp = 1e6;

/// Value and real Jacobian d(u, v)/d(x, y) of one activation at one point.
struct ActivationEval {
  Cplx value;
  RealMat2 jacobian;
  /// d(u, v)/db for modrelu (zero otherwise).
  Cplx dbias{0.0, 0.0};
  bool clamped = false;
};

/// sigma(z). `bias` must be present iff id is modrelu.
///
///   crelu     ReLU(x) + i ReLU(y)
///   zrelu     z on the closed first quadrant, else 0
///   modrelu   ReLU(|z| + b) z / |z|, 0 at z = 0
///   cardioid  (1 + cos arg z) z / 2
///   siglog    z / (1 + |z|)
///   ctanh     (tanh x + i tan y) / (1 + i tanh x tan y)
///   real_relu ReLU(x), imaginary part dropped
Cplx apply(ActivationId id, Cplx z, std::optional<double> bias = std::nullopt);

/// Value plus Jacobian. At a kink the inactive side is used (ReLU'(0) = 0).
ActivationEval evaluate(ActivationId id, Cplx z, double bias = 0.0);

/// Distance from z to the activation's non-differentiable set (poles for ctanh).
double kink_distance(ActivationId id, Cplx z, double bias = 0.0) noexcept;

/// The activation as a Primitive for wirtinger_pair.
Primitive as_primitive(ActivationId id, double bias = 0.0);

/// |d sigma / d conj(z)|, from wirtinger_pair. Throws FlaggedSample on a kink.
double cr_residual(ActivationId id, Cplx z, double bias = 0.0);

/// |sigma(e^{i phi} z) - e^{i phi} sigma(z)|.
double phase_equivariance_defect(ActivationId id, Cplx z, double phi, double bias = 0.0);

struct TrilemmaReport {
  ActivationId activation = ActivationId::crelu;
  double grad_norm_mean = 0.0;
  double grad_norm_std = 0.0;
  double cr_median = 0.0;
  double cr_p95 = 0.0;
  double max_abs = 0.0;
  bool bounded_on_grid = false;
  std::size_t samples = 0;  // grid points kept after kink exclusion
};

/// Square lattice over [-extent, extent]^2 with `resolution` points per axis.
std::vector<Cplx> square_grid(std::size_t resolution = 121, double extent = 3.0);

inline constexpr double kBoundedThreshold = 10.0;

/// CR-residual statistics and boundedness over the grid. Gradient-norm
/// fields are left at zero; the families module fills them from model
/// initialisations (see trilemma_scan in families.hpp).
TrilemmaReport scan_activation(ActivationId id, std::span<const Cplx> grid);

/// Nearest-rank percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

// Tape ops ------------------------------------------------------------------

/// Complex activation applied elementwise to a complex [B, C, T] tensor.
/// `bias` is a real [C] parameter node (modrelu only).
NodeId activate(Tape& tape, ActivationId id, NodeId x, std::optional<NodeId> bias = std::nullopt);

/// Real ReLU on a real tensor of any shape.
NodeId relu(Tape& tape, NodeId x);

}  // namespace cxbench
