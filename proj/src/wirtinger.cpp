#include "cxbench/wirtinger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cxbench/errors.hpp"

namespace cxbench {

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool is_complex) {
  Tensor t;
  t.shape = std::move(shape);
  t.is_complex = is_complex;
  t.data.assign(t.numel() * (is_complex ? 2 : 1), 0.0);
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.shape = {1};
  t.data = {v};
  return t;
}

std::size_t Tensor::numel() const noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---------------------------------------------------------------------------

const ParamEntry& ParamStore::add(std::string name, ParamKind kind, std::size_t length) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  if (kind == ParamKind::complex_pair && length % 2 != 0)
    throw ConfigError("complex-pair parameter needs even length: " + name);
  layout_.push_back({std::move(name), kind, values_.size(), length});
  values_.resize(values_.size() + length, 0.0);
  return layout_.back();
}

const ParamEntry& ParamStore::entry(std::string_view name) const {
  auto it = std::find_if(layout_.begin(), layout_.end(),
                         [&](const ParamEntry& e) { return e.name == name; });
  if (it == layout_.end()) throw ConfigError("unknown parameter: " + std::string(name));
  return *it;
}

bool ParamStore::contains(std::string_view name) const noexcept {
  return std::any_of(layout_.begin(), layout_.end(),
                     [&](const ParamEntry& e) { return e.name == name; });
}

std::span<double> ParamStore::values(std::string_view name) {
  const auto& e = entry(name);
  return {values_.data() + e.offset, e.length};
}

std::span<const double> ParamStore::values(std::string_view name) const {
  const auto& e = entry(name);
  return {values_.data() + e.offset, e.length};
}

// ---------------------------------------------------------------------------

NodeId Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), {}, {}, -1, true});
  return nodes_.size() - 1;
}

NodeId Tape::parameter(const ParamStore& params, std::string_view name,
                       std::vector<std::size_t> shape) {
  const auto& e = params.entry(name);
  Tensor t;
  t.shape = std::move(shape);
  t.is_complex = e.kind == ParamKind::complex_pair;
  if (t.numel() * (t.is_complex ? 2 : 1) != e.length)
    throw ShapeError("parameter shape does not match window: " + e.name);
  auto src = params.values(name);
  t.data.assign(src.begin(), src.end());
  nodes_.push_back({std::move(t), {}, {}, static_cast<std::ptrdiff_t>(e.offset)});
  return nodes_.size() - 1;
}

NodeId Tape::record(Tensor value, BackwardFn backward) {
  nodes_.push_back({std::move(value), {}, std::move(backward), -1});
  return nodes_.size() - 1;
}

Tensor& Tape::grad(NodeId id) {
  Node& n = nodes_.at(id);
  if (n.grad.data.empty()) {
    n.grad.shape = n.value.shape;
    n.grad.is_complex = n.value.is_complex;
    n.grad.data.assign(n.value.data.size(), 0.0);
  }
  return n.grad;
}

std::vector<double> backward(Tape& tape, const ParamStore& params) {
  if (tape.nodes_.empty()) throw ContractViolation("backward on an empty tape");
  const NodeId loss = tape.nodes_.size() - 1;
  const Tensor& out = tape.nodes_[loss].value;
  if (out.is_complex || out.numel() != 1)
    throw ContractViolation("backward requires a real scalar loss as the last tape node");

  std::vector<double> gradient(params.size(), 0.0);
  tape.grad(loss).data[0] = 1.0;
  for (NodeId id = loss + 1; id-- > 0;) {
    auto& node = tape.nodes_[id];
    if (node.grad.data.empty()) continue;
    if (node.backward) node.backward(tape, id);
    if (node.param_offset >= 0) {
      const auto off = static_cast<std::size_t>(node.param_offset);
      const auto& g = tape.nodes_[id].grad.data;
      for (std::size_t i = 0; i < g.size(); ++i) gradient[off + i] += g[i];
    }
  }
  return gradient;
}

// ---------------------------------------------------------------------------

WirtingerPair wirtinger_from_jacobian(const RealMat2& jac) noexcept {
  // df/dx = u_x + i v_x, df/dy = u_y + i v_y.
  const Cplx fx{jac.p, jac.r};
  const Cplx fy{jac.q, jac.s};
  const Cplx i{0.0, 1.0};
  return {0.5 * (fx - i * fy), 0.5 * (fx + i * fy)};
}

WirtingerPair wirtinger_pair(const Primitive& f, Cplx z, double h, double guard) {
  if (f.kink_distance && f.kink_distance(z) < guard)
    throw FlaggedSample("wirtinger_pair: evaluation point is within the kink guard");
  const Cplx dx{h, 0.0}, dy{0.0, h};
  const Cplx fx = (f.eval(z + dx) - f.eval(z - dx)) / (2.0 * h);
  const Cplx fy = (f.eval(z + dy) - f.eval(z - dy)) / (2.0 * h);
  const Cplx i{0.0, 1.0};
  return {0.5 * (fx - i * fy), 0.5 * (fx + i * fy)};
}

double finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                         std::span<const double> point, std::span<const double> analytic,
                         double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be > 0");
  if (point.size() != analytic.size()) throw ShapeError("finite_diff_check: size mismatch");
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = loss(x);
    x[i] = x0 - h;
    const double down = loss(x);
    x[i] = x0;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace ops {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape || a.is_complex != b.is_complex)
    throw ShapeError(std::string(op) + ": operand shapes differ");
}

}  // namespace

NodeId add(Tape& tape, NodeId a, NodeId b) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  require_same(va, vb, "add");
  Tensor out = va;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
  return tape.record(std::move(out), [a, b](Tape& t, NodeId self) {
    const auto g = t.grad(self).data;
    auto& ga = t.grad(a).data;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = t.grad(b).data;
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

NodeId scale(Tape& tape, NodeId a, double c) {
  Tensor out = tape.value(a);
  for (double& v : out.data) v *= c;
  return tape.record(std::move(out), [a, c](Tape& t, NodeId self) {
    const auto& g = t.grad(self).data;
    auto& ga = t.grad(a).data;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

NodeId mul(Tape& tape, NodeId a, NodeId b) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  require_same(va, vb, "mul");
  Tensor out = va;
  if (va.is_complex) {
    for (std::size_t i = 0; i < va.numel(); ++i) out.cdata()[i] = cmul(va.cdata()[i], vb.cdata()[i]);
  } else {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = va.data[i] * vb.data[i];
  }
  return tape.record(std::move(out), [a, b](Tape& t, NodeId self) {
    const Tensor g = t.grad(self);
    const Tensor va = t.value(a), vb = t.value(b);
    Tensor& ga = t.grad(a);
    Tensor& gb = t.grad(b);
    if (g.is_complex) {
      // Real-pair gradient of y = a b: g_a = g conj(b), g_b = g conj(a).
      for (std::size_t i = 0; i < g.numel(); ++i) {
        ga.cdata()[i] += cmul(g.cdata()[i], std::conj(vb.cdata()[i]));
        gb.cdata()[i] += cmul(g.cdata()[i], std::conj(va.cdata()[i]));
      }
    } else {
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        ga.data[i] += g.data[i] * vb.data[i];
        gb.data[i] += g.data[i] * va.data[i];
      }
    }
  });
}

NodeId abs2(Tape& tape, NodeId a) {
  const Tensor& va = tape.value(a);
  Tensor out = Tensor::zeros(va.shape);
  if (va.is_complex) {
    for (std::size_t i = 0; i < va.numel(); ++i) out.data[i] = std::norm(va.cdata()[i]);
  } else {
    for (std::size_t i = 0; i < va.numel(); ++i) out.data[i] = va.data[i] * va.data[i];
  }
  return tape.record(std::move(out), [a](Tape& t, NodeId self) {
    const auto g = t.grad(self).data;
    const Tensor& va = t.value(a);
    auto& ga = t.grad(a).data;
    if (va.is_complex) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[2 * i] += 2.0 * va.data[2 * i] * g[i];
        ga[2 * i + 1] += 2.0 * va.data[2 * i + 1] * g[i];
      }
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * va.data[i] * g[i];
    }
  });
}

NodeId real_part(Tape& tape, NodeId a) {
  const Tensor& va = tape.value(a);
  if (!va.is_complex) throw ShapeError("real_part: operand is not complex");
  Tensor out = Tensor::zeros(va.shape);
  for (std::size_t i = 0; i < va.numel(); ++i) out.data[i] = va.data[2 * i];
  return tape.record(std::move(out), [a](Tape& t, NodeId self) {
    const auto g = t.grad(self).data;
    auto& ga = t.grad(a).data;
    for (std::size_t i = 0; i < g.size(); ++i) ga[2 * i] += g[i];
  });
}

NodeId sum(Tape& tape, NodeId a) {
  const Tensor& va = tape.value(a);
  if (va.is_complex) throw ContractViolation("sum: complex operand; take a real part first");
  const double s = std::accumulate(va.data.begin(), va.data.end(), 0.0);
  return tape.record(Tensor::scalar(s), [a](Tape& t, NodeId self) {
    const double g = t.grad(self).data[0];
    for (double& v : t.grad(a).data) v += g;
  });
}

}  // namespace ops
}  // namespace cxbench
