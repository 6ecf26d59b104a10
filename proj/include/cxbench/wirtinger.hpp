#pragma once

// Define-by-run reverse-mode autodiff over real coordinates.
//
// Complex tensors are stored as interleaved (re, im) doubles and complex
// parameters as complex-pair windows of a flat real vector. Gradients are
// always returned per real coordinate: for a complex parameter w the pair
// (dL/dRe w, dL/dIm w) equals 2 * conj(dL/dw), i.e. twice the conjugate
// Wirtinger derivative dL/d(conj w) for real-valued L.

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cxbench/cnum.hpp"

namespace cxbench {

/// Dense row-major tensor. For complex tensors `data` holds 2 * numel()
/// doubles, (re, im) interleaved, so it can be viewed as std::complex<double>.
struct Tensor {
  std::vector<std::size_t> shape;
  bool is_complex = false;
  std::vector<double> data;

  static Tensor zeros(std::vector<std::size_t> shape, bool is_complex = false);
  static Tensor scalar(double v);

  std::size_t numel() const noexcept;
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  Cplx* cdata() noexcept { return reinterpret_cast<Cplx*>(data.data()); }
  const Cplx* cdata() const noexcept { return reinterpret_cast<const Cplx*>(data.data()); }
};

enum class ParamKind { real, complex_pair };

struct ParamEntry {
  std::string name;
  ParamKind kind = ParamKind::real;
  std::size_t offset = 0;
  std::size_t length = 0;  // real coordinates; even for complex pairs
};

/// Flat real parameter vector with named windows.
class ParamStore {
 public:
  /// Appends a zero-initialised window and returns its entry.
  const ParamEntry& add(std::string name, ParamKind kind, std::size_t length);

  const ParamEntry& entry(std::string_view name) const;
  bool contains(std::string_view name) const noexcept;
  const std::vector<ParamEntry>& layout() const noexcept { return layout_; }

  std::span<double> values(std::string_view name);
  std::span<const double> values(std::string_view name) const;
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Optimizer step counter.
  std::size_t step = 0;

 private:
  std::vector<ParamEntry> layout_;
  std::vector<double> values_;
};

class Tape;
using NodeId = std::size_t;
/// Propagates the gradient of node `self` into the gradients of its inputs.
using BackwardFn = std::function<void(Tape&, NodeId self)>;

/// Ordered record of primitive operations for one forward pass.
class Tape {
 public:
  NodeId constant(Tensor value);
  /// Leaf bound to a ParamStore window; its gradient lands at that offset.
  NodeId parameter(const ParamStore& params, std::string_view name,
                   std::vector<std::size_t> shape);
  NodeId record(Tensor value, BackwardFn backward);

  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  /// Gradient buffer of a node, allocated as zeros on first access.
  Tensor& grad(NodeId id);
  bool has_grad(NodeId id) const { return !nodes_.at(id).grad.data.empty(); }
  /// False for constant() leaves; ops may skip propagating into them.
  bool needs_grad(NodeId id) const { return !nodes_.at(id).is_constant; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Smallest distance of any activation input to that activation's
  /// non-differentiable locus seen so far. Used to keep finite-difference
  /// checks away from kinks.
  double min_kink_distance() const noexcept { return min_kink_distance_; }
  void note_kink_distance(double d) noexcept {
    if (d < min_kink_distance_) min_kink_distance_ = d;
  }

 private:
  friend std::vector<double> backward(Tape& tape, const ParamStore& params);

  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    std::ptrdiff_t param_offset = -1;
    bool is_constant = false;
  };
  std::vector<Node> nodes_;
  double min_kink_distance_ = std::numeric_limits<double>::infinity();
};

/// dL/d(values) for every real coordinate of `params`. The loss is the last
/// node on the tape and must be a real scalar.
std::vector<double> backward(Tape& tape, const ParamStore& params);

struct WirtingerPair {
  Cplx d_z;
  Cplx d_zbar;
};

/// A complex-to-complex map with an optional distance-to-kink function.
struct Primitive {
  std::function<Cplx(Cplx)> eval;
  std::function<double(Cplx)> kink_distance;  // may be empty
};

/// Real Jacobian d(u, v)/d(x, y) as a RealMat2 -> Wirtinger derivatives.
WirtingerPair wirtinger_from_jacobian(const RealMat2& jac) noexcept;

/// Both Wirtinger derivatives of `f` at `z` from central differences along
/// the real and imaginary axes. Throws FlaggedSample within `guard` of a kink.
WirtingerPair wirtinger_pair(const Primitive& f, Cplx z, double h = 1e-6, double guard = 1e-3);

/// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// numeric being the central difference (L(x + h e_i) - L(x - h e_i)) / 2h.
double finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                         std::span<const double> point, std::span<const double> analytic,
                         double h);

// Elementwise building blocks. Binary ops require matching shapes and kinds.
namespace ops {
NodeId add(Tape& tape, NodeId a, NodeId b);
NodeId scale(Tape& tape, NodeId a, double c);
/// Elementwise product; complex operands use complex multiplication.
NodeId mul(Tape& tape, NodeId a, NodeId b);
/// |z|^2 per element (complex -> real) or x^2 (real -> real).
NodeId abs2(Tape& tape, NodeId a);
/// Real part of a complex tensor.
NodeId real_part(Tape& tape, NodeId a);
/// Sum of all (real) entries -> scalar.
NodeId sum(Tape& tape, NodeId a);
}  // namespace ops

}  // namespace cxbench
