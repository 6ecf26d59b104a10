#pragma once

#include <cstddef>
#include <vector>

#include "cxbench/cnum.hpp"
#include "cxbench/wirtinger.hpp"

namespace cxbench {

/// Complex 1-D convolution, weights [out_ch x in_ch x k] row-major.
struct ComplexConv1d {
  std::size_t in_ch = 1, out_ch = 1, k = 1, stride = 1;
  std::vector<Cplx> weights;
  std::vector<Cplx> bias;

  ComplexConv1d() = default;
  ComplexConv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride_ = 1);
  Cplx& w(std::size_t o, std::size_t c, std::size_t t) { return weights[(o * in_ch + c) * k + t]; }
  Cplx w(std::size_t o, std::size_t c, std::size_t t) const { return weights[(o * in_ch + c) * k + t]; }
  /// 2 * (out * in * k + out).
  std::size_t param_count() const noexcept { return 2 * (out_ch * in_ch * k + out_ch); }
};

struct RealConv1d {
  std::size_t in_ch = 1, out_ch = 1, k = 1, stride = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  RealConv1d() = default;
  RealConv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride_ = 1);
  double& w(std::size_t o, std::size_t c, std::size_t t) { return weights[(o * in_ch + c) * k + t]; }
  double w(std::size_t o, std::size_t c, std::size_t t) const { return weights[(o * in_ch + c) * k + t]; }
  std::size_t param_count() const noexcept { return out_ch * in_ch * k + out_ch; }
};

/// Two dense layers with a ReLU between: logits = W2 ReLU(W1 f + b1) + b2.
struct Head {
  std::size_t in = 1, hidden = 1, classes = 1;
  std::vector<double> hidden_weight;  // [hidden x in]
  std::vector<double> hidden_bias;    // [hidden]
  std::vector<double> weight;         // [classes x hidden]
  std::vector<double> bias;           // [classes]

  Head() = default;
  Head(std::size_t in_, std::size_t hidden_, std::size_t classes_);
};

/// floor((T - k) / stride) + 1; throws ShapeError when T < k.
std::size_t conv_output_length(std::size_t length, std::size_t k, std::size_t stride);

/// Valid-mode complex convolution of x [in_ch x T]; every tap is a cmul.
Tensor cconv_forward(const ComplexConv1d& layer, const Tensor& x);

/// Valid-mode real convolution of x [in_ch x T].
Tensor real_conv_forward(const RealConv1d& layer, const Tensor& x);

/// Real two-channel-per-complex-channel convolution whose 2x2 tap blocks are
/// [[a, -b], [b, a]] for the complex taps a + ib of `taps`. Input layout is
/// (re_1, im_1, re_2, im_2, ...), i.e. [2 in_ch x T].
Tensor constrained_real_forward(const ComplexConv1d& taps, const Tensor& x_stacked);

/// The real layer used by constrained_real_forward, exposed for inspection.
RealConv1d constrained_real_layer(const ComplexConv1d& taps);

/// Complex [C x T] <-> interleaved real [2C x T].
Tensor stack_channels(const Tensor& complex_x);
Tensor unstack_channels(const Tensor& stacked);

/// Mean over time of [C x T] (real or complex) -> [C].
Tensor global_avg_pool(const Tensor& x);

/// Pooled complex [C] -> real [2C] as (re_1..re_C, im_1..im_C); real input passes through.
std::vector<double> features_from_pooled(const Tensor& pooled);

std::vector<double> head_forward(const Head& head, std::span<const double> features);

// Batched tape ops ----------------------------------------------------------

/// x [B, Cin, T], w [Cout, Cin, k], b [Cout] -> [B, Cout, T']. Real or
/// complex; all three operands must agree.
NodeId conv1d(Tape& tape, NodeId x, NodeId w, NodeId b, std::size_t stride);

/// [B, C, T] -> [B, C].
NodeId avg_pool(Tape& tape, NodeId x);

/// Complex [B, C] -> real [B, 2C] (re block then im block). Real input is returned unchanged.
NodeId to_real_features(Tape& tape, NodeId x);

/// x [B, F], w [O, F], b [O] -> [B, O].
NodeId dense(Tape& tape, NodeId x, NodeId w, NodeId b);

}  // namespace cxbench
