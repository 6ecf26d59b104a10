#pragma once

// Model families of the evaluation protocol and their cost accounting.
//
// Reference architecture (all families):
//   conv(k, stride 2) -> act -> conv(k, stride 2) -> act -> global mean pool
//   -> dense(hidden) -> ReLU -> dense(classes)
// Complex families run complex convolutions and enter the real head through
// the (re, im) concatenation of the pooled channels. Real families see one of
// the coordinate views and use ReLU.

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "cxbench/activations.hpp"
#include "cxbench/views.hpp"
#include "cxbench/wirtinger.hpp"

namespace cxbench {

enum class Family {
  complex,
  real_stacked,
  real_param_matched,
  real_flop_matched,
  real_polar,
  real_phase,
  real_magnitude
};

std::string_view to_string(Family f) noexcept;
Family family_from_string(std::string_view name);
/// The one view each family is allowed to consume.
ViewId family_view(Family f) noexcept;
bool is_complex_family(Family f) noexcept;

struct FamilySpec {
  Family family = Family::complex;
  ViewId view = ViewId::complex_native;
  ActivationId activation = ActivationId::crelu;  // complex families; real ones use ReLU
  std::size_t width = 32;
  std::size_t in_channels = 1;  // complex channels of the raw data
  std::size_t length = 128;
  std::size_t classes = 3;
  std::size_t kernel = 5;
  std::size_t stride = 2;
  std::size_t hidden = 0;  // head hidden units; 0 follows the conv width

  std::size_t hidden_units(std::size_t conv_width) const noexcept {
    return hidden ? hidden : conv_width;
  }

  /// Spec with the family's canonical view filled in.
  static FamilySpec of(Family family, ActivationId activation, std::size_t width,
                       std::size_t in_channels, std::size_t length, std::size_t classes);
};

struct LayerShape {
  enum class Kind { real_conv, complex_conv, real_dense, complex_dense, activation_bias };
  Kind kind = Kind::real_dense;
  std::size_t in = 0, out = 0, k = 1;
  std::size_t out_length = 1;  // conv output length; 1 for dense
};

struct CostReport {
  std::int64_t param_count = 0;        // real scalars
  std::int64_t flops_per_forward = 0;  // multiply-accumulates
};

/// Exact real-scalar parameter count (complex weights count twice).
std::int64_t count_params(std::span<const LayerShape> layers);
/// MACs per forward pass; one complex tap costs 4 real MACs. Bias adds,
/// pooling and activations are not counted.
std::int64_t count_flops(std::span<const LayerShape> layers);

inline constexpr std::size_t kMinWidth = 4;
inline constexpr std::size_t kMaxWidth = 1024;
inline constexpr double kParamMatchTolerance = 0.05;
inline constexpr double kFlopMatchTolerance = 0.10;

/// Width in [lo, hi] minimising |cost(width) - target|; ties go to the
/// smaller width. Throws ConfigError if target lies outside [cost(lo), cost(hi)].
std::size_t match_width(std::int64_t target, const std::function<std::int64_t(std::size_t)>& cost,
                        std::size_t lo = kMinWidth, std::size_t hi = kMaxWidth);

class Model {
 public:
  /// Wires the reference architecture; matched families get their width from match_width.
  static Model build(const FamilySpec& spec);

  const FamilySpec& spec() const noexcept { return spec_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t hidden() const noexcept { return spec_.hidden_units(width_); }
  bool is_complex() const noexcept { return is_complex_family(spec_.family); }
  ActivationId activation() const noexcept;
  std::size_t input_channels() const noexcept;  // channels after the view
  std::span<const LayerShape> layers() const noexcept { return layers_; }
  CostReport cost() const;

  /// Parameter layout with seeded initialisation: every real coordinate of a
  /// weight ~ N(0, 1 / fan_in), biases zero.
  ParamStore init_params(std::uint64_t seed) const;

  /// Records the forward pass for x [B, C_view, T]; returns the logits node [B, classes].
  NodeId forward(Tape& tape, const ParamStore& params, const Tensor& x) const;

  /// Name of the readout weight whose gradient norm is tracked as head_weight_grad_norm.
  static constexpr std::string_view kHeadWeight = "head.weight";

 private:
  Model(FamilySpec spec, std::size_t width);
  FamilySpec spec_;
  std::size_t width_ = 0;
  std::size_t len1_ = 0, len2_ = 0;
  std::vector<LayerShape> layers_;
};

/// Layer list of the reference architecture for a given family and width.
std::vector<LayerShape> reference_layers(const FamilySpec& spec, std::size_t width);

/// Logits of one sample [C x T] computed through the aI + bJ constrained
/// stacked-real convolutions instead of complex arithmetic. Complex models only.
std::vector<double> witness_logits(const Model& model, const ParamStore& params, const Tensor& sample);

/// CR-residual scan plus gradient-norm-at-initialisation statistics of the
/// complex reference model over `init_seeds`.
TrilemmaReport trilemma_scan(ActivationId id, std::span<const Cplx> grid,
                             std::span<const std::uint64_t> init_seeds);

}  // namespace cxbench
