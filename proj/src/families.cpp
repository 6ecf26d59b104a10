#include "cxbench/families.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cxbench/errors.hpp"
#include "cxbench/layers.hpp"
#include "cxbench/rng.hpp"
#include "cxbench/train.hpp"

namespace cxbench {

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::complex: return "complex";
    case Family::real_stacked: return "real_stacked";
    case Family::real_param_matched: return "real_param_matched";
    case Family::real_flop_matched: return "real_flop_matched";
    case Family::real_polar: return "real_polar";
    case Family::real_phase: return "real_phase";
    case Family::real_magnitude: return "real_magnitude";
  }
  return "?";
}

Family family_from_string(std::string_view name) {
  for (auto f : {Family::complex, Family::real_stacked, Family::real_param_matched,
                 Family::real_flop_matched, Family::real_polar, Family::real_phase,
                 Family::real_magnitude})
    if (to_string(f) == name) return f;
  throw ConfigError("unknown family: " + std::string(name));
}

ViewId family_view(Family f) noexcept {
  switch (f) {
    case Family::complex: return ViewId::complex_native;
    case Family::real_stacked:
    case Family::real_param_matched:
    case Family::real_flop_matched: return ViewId::cartesian;
    case Family::real_polar: return ViewId::polar;
    case Family::real_phase: return ViewId::phase_only;
    case Family::real_magnitude: return ViewId::magnitude_only;
  }
  return ViewId::cartesian;
}

bool is_complex_family(Family f) noexcept { return f == Family::complex; }

FamilySpec FamilySpec::of(Family family, ActivationId activation, std::size_t width,
                          std::size_t in_channels, std::size_t length, std::size_t classes) {
  FamilySpec s;
  s.family = family;
  s.view = family_view(family);
  s.activation = activation;
  s.width = width;
  s.in_channels = in_channels;
  s.length = length;
  s.classes = classes;
  return s;
}

// ---------------------------------------------------------------------------

std::int64_t count_params(std::span<const LayerShape> layers) {
  std::int64_t total = 0;
  for (const auto& l : layers) {
    const auto in = static_cast<std::int64_t>(l.in), out = static_cast<std::int64_t>(l.out),
               k = static_cast<std::int64_t>(l.k);
    switch (l.kind) {
      case LayerShape::Kind::real_conv:
      case LayerShape::Kind::real_dense: total += out * in * k + out; break;
      case LayerShape::Kind::complex_conv:
      case LayerShape::Kind::complex_dense: total += 2 * (out * in * k + out); break;
      case LayerShape::Kind::activation_bias: total += out; break;
    }
  }
  return total;
}

std::int64_t count_flops(std::span<const LayerShape> layers) {
  std::int64_t total = 0;
  for (const auto& l : layers) {
    const auto taps = static_cast<std::int64_t>(l.out * l.in * l.k * l.out_length);
    switch (l.kind) {
      case LayerShape::Kind::real_conv:
      case LayerShape::Kind::real_dense: total += taps; break;
      case LayerShape::Kind::complex_conv:
      case LayerShape::Kind::complex_dense: total += 4 * taps; break;
      case LayerShape::Kind::activation_bias: break;
    }
  }
  return total;
}

std::size_t match_width(std::int64_t target, const std::function<std::int64_t(std::size_t)>& cost,
                        std::size_t lo, std::size_t hi) {
  if (lo > hi) throw ConfigError("match_width: empty width range");
  if (target < cost(lo) || target > cost(hi))
    throw ConfigError("match_width: target " + std::to_string(target) + " unreachable in widths [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  std::size_t best = lo;
  std::int64_t best_gap = std::abs(cost(lo) - target);
  for (std::size_t w = lo + 1; w <= hi; ++w) {
    const std::int64_t c = cost(w);
    const std::int64_t gap = std::abs(c - target);
    if (gap < best_gap) {
      best = w;
      best_gap = gap;
    }
    if (c > target) break;  // monotone: nothing further can be closer
  }
  return best;
}

// ---------------------------------------------------------------------------

std::vector<LayerShape> reference_layers(const FamilySpec& spec, std::size_t width) {
  using K = LayerShape::Kind;
  const bool cplx = is_complex_family(spec.family);
  const std::size_t in = spec.in_channels * (cplx ? 1 : channel_multiplier(spec.view));
  const std::size_t len1 = conv_output_length(spec.length, spec.kernel, spec.stride);
  const std::size_t len2 = conv_output_length(len1, spec.kernel, spec.stride);
  const K conv = cplx ? K::complex_conv : K::real_conv;
  const std::size_t features = cplx ? 2 * width : width;

  std::vector<LayerShape> layers;
  layers.push_back({conv, in, width, spec.kernel, len1});
  if (cplx && spec.activation == ActivationId::modrelu) layers.push_back({K::activation_bias, 0, width, 1, 1});
  layers.push_back({conv, width, width, spec.kernel, len2});
  if (cplx && spec.activation == ActivationId::modrelu) layers.push_back({K::activation_bias, 0, width, 1, 1});
  const std::size_t hidden = spec.hidden_units(width);
  layers.push_back({K::real_dense, features, hidden, 1, 1});
  layers.push_back({K::real_dense, hidden, spec.classes, 1, 1});
  return layers;
}

Model::Model(FamilySpec spec, std::size_t width) : spec_(std::move(spec)), width_(width) {
  len1_ = conv_output_length(spec_.length, spec_.kernel, spec_.stride);
  len2_ = conv_output_length(len1_, spec_.kernel, spec_.stride);
  layers_ = reference_layers(spec_, width_);
}

Model Model::build(const FamilySpec& spec) {
  if (spec.view != family_view(spec.family))
    throw ConfigError("family " + std::string(to_string(spec.family)) + " cannot consume view " +
                      std::string(to_string(spec.view)));
  if (spec.width == 0 || spec.classes < 2 || spec.kernel % 2 == 0 || spec.stride == 0)
    throw ConfigError("invalid family spec");
  if (is_complex_family(spec.family) && spec.activation == ActivationId::real_relu)
    throw ConfigError("complex family needs a complex activation");

  if (spec.family != Family::real_param_matched && spec.family != Family::real_flop_matched)
    return Model(spec, spec.width);

  FamilySpec reference = spec;
  reference.family = Family::complex;
  reference.view = ViewId::complex_native;
  const auto complex_layers = reference_layers(reference, spec.width);
  const bool by_params = spec.family == Family::real_param_matched;
  const std::int64_t target = by_params ? count_params(complex_layers) : count_flops(complex_layers);
  auto cost = [&](std::size_t w) {
    const auto layers = reference_layers(spec, w);
    return by_params ? count_params(layers) : count_flops(layers);
  };
  const std::size_t width = match_width(target, cost);
  const double rel = std::abs(static_cast<double>(cost(width) - target)) / static_cast<double>(target);
  const double tol = by_params ? kParamMatchTolerance : kFlopMatchTolerance;
  if (rel > tol) throw ConfigError("matched width misses its cost target beyond tolerance");
  return Model(spec, width);
}

ActivationId Model::activation() const noexcept {
  return is_complex() ? spec_.activation : ActivationId::real_relu;
}

std::size_t Model::input_channels() const noexcept {
  return spec_.in_channels * (is_complex() ? 1 : channel_multiplier(spec_.view));
}

CostReport Model::cost() const { return {count_params(layers_), count_flops(layers_)}; }

ParamStore Model::init_params(std::uint64_t seed) const {
  ParamStore params;
  const bool cplx = is_complex();
  const ParamKind conv_kind = cplx ? ParamKind::complex_pair : ParamKind::real;
  const std::size_t pair = cplx ? 2 : 1;
  const std::size_t in = input_channels(), w = width_, k = spec_.kernel;
  const std::size_t features = cplx ? 2 * w : w;

  params.add("conv1.weight", conv_kind, pair * w * in * k);
  params.add("conv1.bias", conv_kind, pair * w);
  if (activation() == ActivationId::modrelu) params.add("act1.bias", ParamKind::real, w);
  params.add("conv2.weight", conv_kind, pair * w * w * k);
  params.add("conv2.bias", conv_kind, pair * w);
  if (activation() == ActivationId::modrelu) params.add("act2.bias", ParamKind::real, w);
  const std::size_t hid = hidden();
  params.add("head.hidden.weight", ParamKind::real, hid * features);
  params.add("head.hidden.bias", ParamKind::real, hid);
  params.add(std::string(kHeadWeight), ParamKind::real, spec_.classes * hid);
  params.add("head.bias", ParamKind::real, spec_.classes);

  Rng rng = Rng::stream(seed, 0x1417);
  auto fill = [&](std::string_view name, std::size_t fan_in) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : params.values(name)) v = rng.normal(0.0, sd);
  };
  fill("conv1.weight", in * k);
  fill("conv2.weight", w * k);
  fill("head.hidden.weight", features);
  fill(kHeadWeight, hid);
  return params;
}

NodeId Model::forward(Tape& tape, const ParamStore& params, const Tensor& x) const {
  const bool cplx = is_complex();
  if (x.shape.size() != 3 || x.dim(1) != input_channels() || x.is_complex != cplx)
    throw ShapeError("Model::forward: input does not match the model's view");
  const std::size_t in = input_channels(), w = width_, k = spec_.kernel;
  const std::size_t features = cplx ? 2 * w : w;

  NodeId h = tape.constant(x);
  auto block = [&](NodeId input, std::size_t cin, const char* conv, const char* act_bias) {
    const NodeId weight = tape.parameter(params, std::string(conv) + ".weight", {w, cin, k});
    const NodeId bias = tape.parameter(params, std::string(conv) + ".bias", {w});
    const NodeId z = conv1d(tape, input, weight, bias, spec_.stride);
    if (!cplx) return relu(tape, z);
    if (spec_.activation == ActivationId::modrelu)
      return activate(tape, spec_.activation, z, tape.parameter(params, act_bias, {w}));
    return activate(tape, spec_.activation, z);
  };
  h = block(h, in, "conv1", "act1.bias");
  h = block(h, w, "conv2", "act2.bias");
  h = to_real_features(tape, avg_pool(tape, h));
  const std::size_t hid = hidden();
  h = dense(tape, h, tape.parameter(params, "head.hidden.weight", {hid, features}),
            tape.parameter(params, "head.hidden.bias", {hid}));
  h = relu(tape, h);
  return dense(tape, h, tape.parameter(params, kHeadWeight, {spec_.classes, hid}),
               tape.parameter(params, "head.bias", {spec_.classes}));
}

// ---------------------------------------------------------------------------

namespace {

ComplexConv1d conv_from_params(const ParamStore& params, const std::string& name, std::size_t in,
                               std::size_t out, std::size_t k, std::size_t stride) {
  ComplexConv1d layer(in, out, k, stride);
  auto w = params.values(name + ".weight");
  auto b = params.values(name + ".bias");
  for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] = {w[2 * i], w[2 * i + 1]};
  for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] = {b[2 * i], b[2 * i + 1]};
  return layer;
}

// Complex activation applied to (re, im) channel pairs of a stacked real tensor.
Tensor activate_stacked(const Tensor& stacked, ActivationId id, std::span<const double> bias) {
  Tensor z = unstack_channels(stacked);
  const std::size_t channels = z.dim(0), len = z.dim(1);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < len; ++t) {
      Cplx& v = z.cdata()[c * len + t];
      v = evaluate(id, v, bias.empty() ? 0.0 : bias[c]).value;
    }
  return stack_channels(z);
}

}  // namespace

std::vector<double> witness_logits(const Model& model, const ParamStore& params, const Tensor& sample) {
  if (!model.is_complex()) throw ConfigError("witness_logits: complex models only");
  const auto& spec = model.spec();
  const std::size_t w = model.width();
  const auto conv1 = conv_from_params(params, "conv1", spec.in_channels, w, spec.kernel, spec.stride);
  const auto conv2 = conv_from_params(params, "conv2", w, w, spec.kernel, spec.stride);
  const bool mod = spec.activation == ActivationId::modrelu;
  const std::span<const double> b1 = mod ? params.values("act1.bias") : std::span<const double>{};
  const std::span<const double> b2 = mod ? params.values("act2.bias") : std::span<const double>{};

  Tensor h = stack_channels(sample);
  h = activate_stacked(constrained_real_forward(conv1, h), spec.activation, b1);
  h = activate_stacked(constrained_real_forward(conv2, h), spec.activation, b2);
  const Tensor pooled = global_avg_pool(unstack_channels(h));

  Head head(2 * w, model.hidden(), spec.classes);
  auto copy = [&](std::string_view name, std::vector<double>& dst) {
    auto src = params.values(name);
    dst.assign(src.begin(), src.end());
  };
  copy("head.hidden.weight", head.hidden_weight);
  copy("head.hidden.bias", head.hidden_bias);
  copy(Model::kHeadWeight, head.weight);
  copy("head.bias", head.bias);
  return head_forward(head, features_from_pooled(pooled));
}

TrilemmaReport trilemma_scan(ActivationId id, std::span<const Cplx> grid,
                             std::span<const std::uint64_t> init_seeds) {
  TrilemmaReport report = scan_activation(id, grid);
  if (init_seeds.empty()) return report;

  // Reference model at its default width on a unit-power complex Gaussian batch.
  const FamilySpec spec = FamilySpec::of(Family::complex, id, 32, 1, 128, 3);
  const Model model = Model::build(spec);
  constexpr std::size_t kBatch = 32;
  std::vector<double> norms;
  for (std::uint64_t seed : init_seeds) {
    Rng rng = Rng::stream(seed, 0x7e11);
    Tensor x = Tensor::zeros({kBatch, 1, spec.length}, true);
    for (double& v : x.data) v = rng.normal(0.0, std::sqrt(0.5));
    std::vector<std::size_t> labels(kBatch);
    for (auto& l : labels) l = rng.below(spec.classes);
    const ParamStore params = model.init_params(seed);
    Tape tape;
    cross_entropy_loss(tape, model.forward(tape, params, x), labels);
    const auto g = backward(tape, params);
    norms.push_back(std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0)));
  }
  const double n = static_cast<double>(norms.size());
  report.grad_norm_mean = std::accumulate(norms.begin(), norms.end(), 0.0) / n;
  double var = 0.0;
  for (double v : norms) var += (v - report.grad_norm_mean) * (v - report.grad_norm_mean);
  report.grad_norm_std = norms.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  return report;
}

}  // namespace cxbench
