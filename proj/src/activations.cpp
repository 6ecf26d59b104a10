#include "cxbench/activations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cxbench/errors.hpp"

namespace cxbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ActivationEval eval_crelu(Cplx z) {
  const bool ax = z.real() > 0.0, ay = z.imag() > 0.0;
  return {{ax ? z.real() : 0.0, ay ? z.imag() : 0.0},
          {ax ? 1.0 : 0.0, 0.0, 0.0, ay ? 1.0 : 0.0}};
}

ActivationEval eval_zrelu(Cplx z) {
  const bool inside = z.real() >= 0.0 && z.imag() >= 0.0;
  const bool interior = z.real() > 0.0 && z.imag() > 0.0;
  return {inside ? z : Cplx{}, interior ? RealMat2::identity() : RealMat2{}};
}

ActivationEval eval_modrelu(Cplx z, double b) {
  const double r = std::abs(z);
  if (r == 0.0 || r + b <= 0.0) return {{}, {}, {}};
  const double x = z.real(), y = z.imag();
  const double g = 1.0 + b / r;  // sigma = g z
  const double c = b / (r * r * r);
  ActivationEval e;
  e.value = {g * x, g * y};
  e.jacobian = {g - c * x * x, -c * x * y, -c * x * y, g - c * y * y};
  e.dbias = {x / r, y / r};
  return e;
}

ActivationEval eval_cardioid(Cplx z) {
  const double r = std::abs(z);
  if (r == 0.0) return {{}, {}};
  const double x = z.real(), y = z.imag();
  // u = (x + x^2/r)/2, v = (y + x y/r)/2
  const double r3 = r * r * r;
  ActivationEval e;
  e.value = {0.5 * (x + x * x / r), 0.5 * (y + x * y / r)};
  e.jacobian = {0.5 * (1.0 + 2.0 * x / r - x * x * x / r3), 0.5 * (-x * x * y / r3),
                0.5 * (y / r - x * x * y / r3), 0.5 * (1.0 + x / r - x * y * y / r3)};
  return e;
}

ActivationEval eval_siglog(Cplx z) {
  const double r = std::abs(z);
  const double x = z.real(), y = z.imag();
  const double d = 1.0 + r;
  ActivationEval e;
  e.value = {x / d, y / d};
  if (r == 0.0) {
    e.jacobian = RealMat2::identity();
    return e;
  }
  const double c = 1.0 / (r * d * d);
  e.jacobian = {1.0 / d - c * x * x, -c * x * y, -c * x * y, 1.0 / d - c * y * y};
  return e;
}

Cplx clamp_magnitude(Cplx z, bool& clamped) {
  const double m = std::abs(z);
  if (!std::isfinite(m) || m > kTanhClamp) {
    clamped = true;
    if (!std::isfinite(m)) return {kTanhClamp, 0.0};
    return z * (kTanhClamp / m);
  }
  return z;
}

ActivationEval eval_ctanh(Cplx z) {
  const double tx = std::tanh(z.real());
  const double ty = std::tan(z.imag());
  Cplx t = Cplx{tx, ty} / Cplx{1.0, tx * ty};
  ActivationEval e;
  e.value = clamp_magnitude(t, e.clamped);
  const Cplx deriv = clamp_magnitude(1.0 - t * t, e.clamped);
  e.jacobian = as_real_matrix(deriv);
  return e;
}

ActivationEval eval_real_relu(Cplx z) {
  const bool on = z.real() > 0.0;
  return {{on ? z.real() : 0.0, 0.0}, {on ? 1.0 : 0.0, 0.0, 0.0, 0.0}};
}

}  // namespace

std::string_view to_string(ActivationId id) noexcept {
  switch (id) {
    case ActivationId::crelu: return "crelu";
    case ActivationId::zrelu: return "zrelu";
    case ActivationId::modrelu: return "modrelu";
    case ActivationId::cardioid: return "cardioid";
    case ActivationId::siglog: return "siglog";
    case ActivationId::ctanh: return "ctanh";
    case ActivationId::real_relu: return "real_relu";
  }
  return "?";
}

ActivationId activation_from_string(std::string_view name) {
  for (auto id : {ActivationId::crelu, ActivationId::zrelu, ActivationId::modrelu,
                  ActivationId::cardioid, ActivationId::siglog, ActivationId::ctanh,
                  ActivationId::real_relu}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown activation: " + std::string(name));
}

ActivationEval evaluate(ActivationId id, Cplx z, double bias) {
  switch (id) {
    case ActivationId::crelu: return eval_crelu(z);
    case ActivationId::zrelu: return eval_zrelu(z);
    case ActivationId::modrelu: return eval_modrelu(z, bias);
    case ActivationId::cardioid: return eval_cardioid(z);
    case ActivationId::siglog: return eval_siglog(z);
    case ActivationId::ctanh: return eval_ctanh(z);
    case ActivationId::real_relu: return eval_real_relu(z);
  }
  throw ConfigError("unhandled activation");
}

Cplx apply(ActivationId id, Cplx z, std::optional<double> bias) {
  if ((id == ActivationId::modrelu) != bias.has_value())
    throw ContractViolation("apply: bias must be given for modrelu and only for modrelu");
  return evaluate(id, z, bias.value_or(0.0)).value;
}

double kink_distance(ActivationId id, Cplx z, double bias) noexcept {
  const double x = z.real(), y = z.imag();
  switch (id) {
    case ActivationId::crelu: return std::min(std::abs(x), std::abs(y));
    case ActivationId::zrelu:
      if (x >= 0.0 && y >= 0.0) return std::min(x, y);
      if (x < 0.0 && y >= 0.0) return -x;
      if (y < 0.0 && x >= 0.0) return -y;
      return std::abs(z);
    case ActivationId::modrelu: {
      const double r = std::abs(z);
      return std::min(r, std::abs(r + bias));
    }
    case ActivationId::cardioid: return std::abs(z);
    case ActivationId::siglog: return kInf;
    case ActivationId::ctanh: {
      const double n = std::round((y - M_PI / 2.0) / M_PI);
      return std::abs(z - Cplx{0.0, M_PI / 2.0 + n * M_PI});
    }
    case ActivationId::real_relu: return std::abs(x);
  }
  return kInf;
}

Primitive as_primitive(ActivationId id, double bias) {
  return {[id, bias](Cplx z) { return evaluate(id, z, bias).value; },
          [id, bias](Cplx z) { return kink_distance(id, z, bias); }};
}

double cr_residual(ActivationId id, Cplx z, double bias) {
  return std::abs(wirtinger_pair(as_primitive(id, bias), z).d_zbar);
}

double phase_equivariance_defect(ActivationId id, Cplx z, double phi, double bias) {
  const Cplx e = std::polar(1.0, phi);
  return std::abs(evaluate(id, cmul(e, z), bias).value - cmul(e, evaluate(id, z, bias).value));
}

std::vector<Cplx> square_grid(std::size_t resolution, double extent) {
  if (resolution < 2) throw ConfigError("square_grid: resolution must be >= 2");
  std::vector<Cplx> grid;
  grid.reserve(resolution * resolution);
  const double step = 2.0 * extent / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      grid.emplace_back(-extent + step * static_cast<double>(j),
                        -extent + step * static_cast<double>(i));
    }
  }
  return grid;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw StatsError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

TrilemmaReport scan_activation(ActivationId id, std::span<const Cplx> grid) {
  TrilemmaReport report;
  report.activation = id;
  std::vector<double> residuals;
  residuals.reserve(grid.size());
  for (Cplx z : grid) {
    report.max_abs = std::max(report.max_abs, std::abs(evaluate(id, z).value));
    try {
      residuals.push_back(cr_residual(id, z));
    } catch (const FlaggedSample&) {
      // kink sample: excluded from the residual statistics
    }
  }
  report.samples = residuals.size();
  report.cr_median = percentile(residuals, 0.5);
  report.cr_p95 = percentile(residuals, 0.95);
  report.bounded_on_grid = report.max_abs <= kBoundedThreshold;
  return report;
}

// ---------------------------------------------------------------------------

NodeId activate(Tape& tape, ActivationId id, NodeId x, std::optional<NodeId> bias) {
  const Tensor& in = tape.value(x);
  if (!in.is_complex || in.shape.size() != 3) throw ShapeError("activate: expects complex [B, C, T]");
  if ((id == ActivationId::modrelu) != bias.has_value())
    throw ContractViolation("activate: bias node must be given for modrelu and only for modrelu");
  const std::size_t batch = in.dim(0), channels = in.dim(1), steps = in.dim(2);
  const double* b = nullptr;
  if (bias) {
    const Tensor& bv = tape.value(*bias);
    if (bv.is_complex || bv.numel() != channels) throw ShapeError("activate: bias must be real [C]");
    b = bv.data.data();
  }

  const std::size_t n = in.numel();
  Tensor out = Tensor::zeros(in.shape, true);
  std::vector<RealMat2> jac(n);
  std::vector<Cplx> dbias(bias ? n : 0);
  double nearest = kInf;
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double bc = b ? b[c] : 0.0;
      for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t i = (bi * channels + c) * steps + t;
        const Cplx z = in.cdata()[i];
        const ActivationEval e = evaluate(id, z, bc);
        out.cdata()[i] = e.value;
        jac[i] = e.jacobian;
        if (bias) dbias[i] = e.dbias;
        nearest = std::min(nearest, kink_distance(id, z, bc));
      }
    }
  }
  tape.note_kink_distance(nearest);

  return tape.record(std::move(out), [x, bias, jac = std::move(jac), dbias = std::move(dbias),
                                      channels, steps](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(x);
    double* gb = bias ? t.grad(*bias).data.data() : nullptr;
    for (std::size_t i = 0; i < jac.size(); ++i) {
      const double gu = g.data[2 * i], gv = g.data[2 * i + 1];
      const RealMat2& j = jac[i];
      // (gx, gy) = J^T (gu, gv)
      gx.data[2 * i] += gu * j.p + gv * j.r;
      gx.data[2 * i + 1] += gu * j.q + gv * j.s;
      if (gb) {
        const std::size_t c = (i / steps) % channels;
        gb[c] += gu * dbias[i].real() + gv * dbias[i].imag();
      }
    }
  });
}

NodeId relu(Tape& tape, NodeId x) {
  const Tensor& in = tape.value(x);
  if (in.is_complex) throw ShapeError("relu: expects a real tensor");
  Tensor out = in;
  double nearest = kInf;
  for (double& v : out.data) {
    nearest = std::min(nearest, std::abs(v));
    v = v > 0.0 ? v : 0.0;
  }
  tape.note_kink_distance(nearest);
  return tape.record(std::move(out), [x](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& in = t.value(x);
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < g.data.size(); ++i)
      if (in.data[i] > 0.0) gx.data[i] += g.data[i];
  });
}

}  // namespace cxbench
