#include "cxbench/layers.hpp"

// Products always take the packed GEMM path: the coefficient-based kernel for
// small operands peels by data address, which makes summation order (and thus
// results) depend on heap alignment.
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 1
#include <Eigen/Dense>
#include <algorithm>

#include "cxbench/errors.hpp"

namespace cxbench {

ComplexConv1d::ComplexConv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride_)
    : in_ch(in), out_ch(out), k(kernel), stride(stride_),
      weights(out * in * kernel), bias(out) {}

RealConv1d::RealConv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride_)
    : in_ch(in), out_ch(out), k(kernel), stride(stride_),
      weights(out * in * kernel), bias(out) {}

Head::Head(std::size_t in_, std::size_t hidden_, std::size_t classes_)
    : in(in_), hidden(hidden_), classes(classes_),
      hidden_weight(hidden_ * in_), hidden_bias(hidden_),
      weight(classes_ * hidden_), bias(classes_) {}

std::size_t conv_output_length(std::size_t length, std::size_t k, std::size_t stride) {
  if (stride == 0) throw ShapeError("conv: stride must be positive");
  if (length < k) throw ShapeError("conv: sequence shorter than kernel");
  return (length - k) / stride + 1;
}

namespace {

void require_2d(const Tensor& x, std::size_t channels, bool is_complex, const char* what) {
  if (x.shape.size() != 2 || x.dim(0) != channels || x.is_complex != is_complex)
    throw ShapeError(std::string(what) + ": input layout mismatch");
}

}  // namespace

Tensor cconv_forward(const ComplexConv1d& layer, const Tensor& x) {
  require_2d(x, layer.in_ch, true, "cconv_forward");
  const std::size_t len = x.dim(1);
  const std::size_t out_len = conv_output_length(len, layer.k, layer.stride);
  Tensor y = Tensor::zeros({layer.out_ch, out_len}, true);
  for (std::size_t o = 0; o < layer.out_ch; ++o) {
    for (std::size_t t = 0; t < out_len; ++t) {
      Cplx acc = layer.bias[o];
      for (std::size_t c = 0; c < layer.in_ch; ++c)
        for (std::size_t j = 0; j < layer.k; ++j)
          acc += cmul(layer.w(o, c, j), x.cdata()[c * len + t * layer.stride + j]);
      y.cdata()[o * out_len + t] = acc;
    }
  }
  return y;
}

Tensor real_conv_forward(const RealConv1d& layer, const Tensor& x) {
  require_2d(x, layer.in_ch, false, "real_conv_forward");
  const std::size_t len = x.dim(1);
  const std::size_t out_len = conv_output_length(len, layer.k, layer.stride);
  Tensor y = Tensor::zeros({layer.out_ch, out_len});
  for (std::size_t o = 0; o < layer.out_ch; ++o) {
    for (std::size_t t = 0; t < out_len; ++t) {
      double acc = layer.bias[o];
      for (std::size_t c = 0; c < layer.in_ch; ++c)
        for (std::size_t j = 0; j < layer.k; ++j)
          acc += layer.w(o, c, j) * x.data[c * len + t * layer.stride + j];
      y.data[o * out_len + t] = acc;
    }
  }
  return y;
}

RealConv1d constrained_real_layer(const ComplexConv1d& taps) {
  RealConv1d real(2 * taps.in_ch, 2 * taps.out_ch, taps.k, taps.stride);
  for (std::size_t o = 0; o < taps.out_ch; ++o) {
    for (std::size_t c = 0; c < taps.in_ch; ++c) {
      for (std::size_t j = 0; j < taps.k; ++j) {
        const RealMat2 block = as_real_matrix(taps.w(o, c, j));
        real.w(2 * o, 2 * c, j) = block.p;
        real.w(2 * o, 2 * c + 1, j) = block.q;
        real.w(2 * o + 1, 2 * c, j) = block.r;
        real.w(2 * o + 1, 2 * c + 1, j) = block.s;
      }
    }
    real.bias[2 * o] = taps.bias[o].real();
    real.bias[2 * o + 1] = taps.bias[o].imag();
  }
  return real;
}

Tensor constrained_real_forward(const ComplexConv1d& taps, const Tensor& x_stacked) {
  if (x_stacked.is_complex || x_stacked.shape.size() != 2 || x_stacked.dim(0) != 2 * taps.in_ch)
    throw ShapeError("constrained_real_forward: expected real [2 in_ch x T] stacked input");
  return real_conv_forward(constrained_real_layer(taps), x_stacked);
}

Tensor stack_channels(const Tensor& x) {
  if (!x.is_complex || x.shape.size() != 2) throw ShapeError("stack_channels: expected complex [C x T]");
  const std::size_t channels = x.dim(0), len = x.dim(1);
  Tensor out = Tensor::zeros({2 * channels, len});
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < len; ++t) {
      out.data[(2 * c) * len + t] = x.cdata()[c * len + t].real();
      out.data[(2 * c + 1) * len + t] = x.cdata()[c * len + t].imag();
    }
  return out;
}

Tensor unstack_channels(const Tensor& x) {
  if (x.is_complex || x.shape.size() != 2 || x.dim(0) % 2 != 0)
    throw ShapeError("unstack_channels: expected real [2C x T]");
  const std::size_t channels = x.dim(0) / 2, len = x.dim(1);
  Tensor out = Tensor::zeros({channels, len}, true);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < len; ++t)
      out.cdata()[c * len + t] = {x.data[(2 * c) * len + t], x.data[(2 * c + 1) * len + t]};
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.shape.size() != 2 || x.dim(1) == 0) throw ShapeError("global_avg_pool: expected [C x T], T >= 1");
  const std::size_t channels = x.dim(0), len = x.dim(1);
  const std::size_t width = x.is_complex ? 2 : 1;
  Tensor out = Tensor::zeros({channels}, x.is_complex);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t p = 0; p < width; ++p)
        out.data[c * width + p] += x.data[(c * len + t) * width + p];
  for (double& v : out.data) v /= static_cast<double>(len);
  return out;
}

std::vector<double> features_from_pooled(const Tensor& pooled) {
  if (!pooled.is_complex) return pooled.data;
  const std::size_t channels = pooled.numel();
  std::vector<double> f(2 * channels);
  for (std::size_t c = 0; c < channels; ++c) {
    f[c] = pooled.cdata()[c].real();
    f[channels + c] = pooled.cdata()[c].imag();
  }
  return f;
}

std::vector<double> head_forward(const Head& head, std::span<const double> features) {
  if (features.size() != head.in) throw ShapeError("head_forward: feature dimension mismatch");
  std::vector<double> hidden(head.hidden);
  for (std::size_t h = 0; h < head.hidden; ++h) {
    double acc = head.hidden_bias[h];
    for (std::size_t i = 0; i < head.in; ++i) acc += head.hidden_weight[h * head.in + i] * features[i];
    hidden[h] = std::max(acc, 0.0);
  }
  std::vector<double> logits(head.classes);
  for (std::size_t c = 0; c < head.classes; ++c) {
    double acc = head.bias[c];
    for (std::size_t h = 0; h < head.hidden; ++h) acc += head.weight[c * head.hidden + h] * hidden[h];
    logits[c] = acc;
  }
  return logits;
}

// ---------------------------------------------------------------------------
// Batched ops. Convolution is lowered to one GEMM per call over an im2col
// patch matrix P [(Cin k) x (B T')].

namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
const S* typed(const Tensor& t) {
  if constexpr (std::is_same_v<S, Cplx>) return t.cdata();
  else return t.data.data();
}
template <typename S>
S* typed(Tensor& t) {
  if constexpr (std::is_same_v<S, Cplx>) return t.cdata();
  else return t.data.data();
}

template <typename S>
S conj_if_complex(S v) {
  if constexpr (std::is_same_v<S, Cplx>) return std::conj(v);
  else return v;
}

template <typename S>
NodeId conv1d_impl(Tape& tape, NodeId x, NodeId w, NodeId b, std::size_t stride) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(w);
  const std::size_t batch = xv.dim(0), cin = xv.dim(1), len = xv.dim(2);
  const std::size_t cout = wv.dim(0), k = wv.dim(2);
  const std::size_t out_len = conv_output_length(len, k, stride);
  const std::size_t rows = cin * k, cols = batch * out_len;

  Mat<S> patches(rows, cols);
  const S* xs = typed<S>(xv);
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t t = 0; t < out_len; ++t) {
      S* col = patches.data() + (bi * out_len + t) * rows;
      for (std::size_t c = 0; c < cin; ++c) {
        const S* src = xs + (bi * cin + c) * len + t * stride;
        std::copy(src, src + k, col + c * k);
      }
    }

  Eigen::Map<const RowMat<S>> weight(typed<S>(wv), cout, rows);
  Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bias(typed<S>(tape.value(b)), cout);
  Mat<S> y = weight * patches;
  y.colwise() += bias;

  Tensor out = Tensor::zeros({batch, cout, out_len}, std::is_same_v<S, Cplx>);
  S* ys = typed<S>(out);
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t t = 0; t < out_len; ++t)
        ys[(bi * cout + o) * out_len + t] = y(o, bi * out_len + t);

  return tape.record(std::move(out), [x, w, b, stride, batch, cin, len, cout, k, out_len,
                                      patches = std::move(patches)](Tape& t, NodeId self) {
    const std::size_t rows = cin * k, cols = batch * out_len;
    const S* gs = typed<S>(t.grad(self));
    Mat<S> gy(cout, cols);
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t tt = 0; tt < out_len; ++tt)
          gy(o, bi * out_len + tt) = gs[(bi * cout + o) * out_len + tt];

    // Real-pair gradients: dW = G P^H, db = G 1, dP = W^H G.
    Eigen::Map<RowMat<S>> gw(typed<S>(t.grad(w)), cout, rows);
    gw.noalias() += gy * patches.adjoint();
    S* gb = typed<S>(t.grad(b));
    for (std::size_t o = 0; o < cout; ++o) {
      S acc{};
      for (std::size_t c = 0; c < cols; ++c) acc += gy(o, c);
      gb[o] += acc;
    }

    if (!t.needs_grad(x)) return;
    Eigen::Map<const RowMat<S>> weight(typed<S>(t.value(w)), cout, rows);
    const Mat<S> gp = weight.adjoint() * gy;
    S* gx = typed<S>(t.grad(x));
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t tt = 0; tt < out_len; ++tt) {
        const S* col = gp.data() + (bi * out_len + tt) * rows;
        for (std::size_t c = 0; c < cin; ++c) {
          S* dst = gx + (bi * cin + c) * len + tt * stride;
          for (std::size_t j = 0; j < k; ++j) dst[j] += col[c * k + j];
        }
      }
  });
}

}  // namespace

NodeId conv1d(Tape& tape, NodeId x, NodeId w, NodeId b, std::size_t stride) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(w);
  const Tensor& bv = tape.value(b);
  if (xv.shape.size() != 3 || wv.shape.size() != 3 || bv.shape.size() != 1)
    throw ShapeError("conv1d: expected x [B, Cin, T], w [Cout, Cin, k], b [Cout]");
  if (wv.dim(1) != xv.dim(1) || bv.dim(0) != wv.dim(0))
    throw ShapeError("conv1d: channel counts do not match");
  if (xv.is_complex != wv.is_complex || wv.is_complex != bv.is_complex)
    throw ShapeError("conv1d: mixed real and complex operands");
  return xv.is_complex ? conv1d_impl<Cplx>(tape, x, w, b, stride)
                       : conv1d_impl<double>(tape, x, w, b, stride);
}

NodeId avg_pool(Tape& tape, NodeId x) {
  const Tensor& xv = tape.value(x);
  if (xv.shape.size() != 3 || xv.dim(2) == 0) throw ShapeError("avg_pool: expected [B, C, T]");
  const std::size_t rows = xv.dim(0) * xv.dim(1), len = xv.dim(2);
  const std::size_t width = xv.is_complex ? 2 : 1;
  Tensor out = Tensor::zeros({xv.dim(0), xv.dim(1)}, xv.is_complex);
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t p = 0; p < width; ++p) out.data[r * width + p] += xv.data[(r * len + t) * width + p];
  for (double& v : out.data) v *= inv;
  return tape.record(std::move(out), [x, rows, len, width, inv](Tape& t, NodeId self) {
    const auto& g = t.grad(self).data;
    auto& gx = t.grad(x).data;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t tt = 0; tt < len; ++tt)
        for (std::size_t p = 0; p < width; ++p) gx[(r * len + tt) * width + p] += g[r * width + p] * inv;
  });
}

NodeId to_real_features(Tape& tape, NodeId x) {
  const Tensor& xv = tape.value(x);
  if (xv.shape.size() != 2) throw ShapeError("to_real_features: expected [B, C]");
  if (!xv.is_complex) return x;
  const std::size_t batch = xv.dim(0), channels = xv.dim(1);
  Tensor out = Tensor::zeros({batch, 2 * channels});
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t c = 0; c < channels; ++c) {
      out.data[bi * 2 * channels + c] = xv.data[2 * (bi * channels + c)];
      out.data[bi * 2 * channels + channels + c] = xv.data[2 * (bi * channels + c) + 1];
    }
  return tape.record(std::move(out), [x, batch, channels](Tape& t, NodeId self) {
    const auto& g = t.grad(self).data;
    auto& gx = t.grad(x).data;
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t c = 0; c < channels; ++c) {
        gx[2 * (bi * channels + c)] += g[bi * 2 * channels + c];
        gx[2 * (bi * channels + c) + 1] += g[bi * 2 * channels + channels + c];
      }
  });
}

NodeId dense(Tape& tape, NodeId x, NodeId w, NodeId b) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(w);
  const Tensor& bv = tape.value(b);
  if (xv.is_complex || wv.is_complex || bv.is_complex) throw ShapeError("dense: real operands only");
  if (xv.shape.size() != 2 || wv.shape.size() != 2 || wv.dim(1) != xv.dim(1) || bv.numel() != wv.dim(0))
    throw ShapeError("dense: dimension mismatch");
  const std::size_t batch = xv.dim(0), in = xv.dim(1), out_dim = wv.dim(0);
  Eigen::Map<const RowMat<double>> xm(xv.data.data(), batch, in);
  Eigen::Map<const RowMat<double>> wm(wv.data.data(), out_dim, in);
  Eigen::Map<const Eigen::RowVectorXd> bm(bv.data.data(), out_dim);
  Tensor out = Tensor::zeros({batch, out_dim});
  Eigen::Map<RowMat<double>> ym(out.data.data(), batch, out_dim);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += bm;
  return tape.record(std::move(out), [x, w, b, batch, in, out_dim](Tape& t, NodeId self) {
    Eigen::Map<const RowMat<double>> g(t.grad(self).data.data(), batch, out_dim);
    Eigen::Map<const RowMat<double>> xm(t.value(x).data.data(), batch, in);
    Eigen::Map<const RowMat<double>> wm(t.value(w).data.data(), out_dim, in);
    Eigen::Map<RowMat<double>> gw(t.grad(w).data.data(), out_dim, in);
    gw.noalias() += g.transpose() * xm;
    double* gb = t.grad(b).data.data();
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t o = 0; o < out_dim; ++o) gb[o] += g(r, o);
    Eigen::Map<RowMat<double>> gx(t.grad(x).data.data(), batch, in);
    gx.noalias() += g * wm;
  });
}

}  // namespace cxbench
