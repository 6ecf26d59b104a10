#include "cxbench/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "cxbench/errors.hpp"
#include "cxbench/rng.hpp"

namespace cxbench {

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (logits.size() < 2) throw ShapeError("cross_entropy: need at least two classes");
  if (label >= logits.size()) throw ShapeError("cross_entropy: label out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  return std::log(s) - (logits[label] - mx);
}

NodeId cross_entropy_loss(Tape& tape, NodeId logits, std::span<const std::size_t> labels) {
  const Tensor& z = tape.value(logits);
  if (z.is_complex || z.shape.size() != 2 || z.dim(0) != labels.size())
    throw ShapeError("cross_entropy_loss: expected real [B, C] logits");
  const std::size_t B = z.dim(0), C = z.dim(1);
  // Softmax probabilities are kept for the backward pass.
  std::vector<double> prob(B * C);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    std::span<const double> row(z.data.data() + b * C, C);
    total += cross_entropy(row, labels[b]);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += (prob[b * C + c] = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < C; ++c) prob[b * C + c] /= s;
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return tape.record(Tensor::scalar(total / static_cast<double>(B)),
                     [logits, prob = std::move(prob), lab = std::move(lab), B, C](Tape& t, NodeId self) {
                       const double g = t.grad(self).data[0] / static_cast<double>(B);
                       auto& gz = t.grad(logits).data;
                       for (std::size_t b = 0; b < B; ++b)
                         for (std::size_t c = 0; c < C; ++c)
                           gz[b * C + c] += g * (prob[b * C + c] - (c == lab[b] ? 1.0 : 0.0));
                     });
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and non-negative");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
}

bool adamw_step(ParamStore& params, std::span<const double> grads, AdamState& state,
                const TrainConfig& cfg) {
  auto& theta = params.values();
  if (grads.size() != theta.size()) throw ShapeError("adamw_step: gradient size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) return false;
  if (state.m.size() != theta.size()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  }
  const auto t = static_cast<double>(++params.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= cfg.lr * cfg.weight_decay * theta[i];
    theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  return true;
}

double TelemetryTrace::grad_norm(std::size_t step, std::string_view name) const {
  const auto col = std::find(param_names.begin(), param_names.end(), name);
  if (col == param_names.end()) throw ConfigError("no telemetry column: " + std::string(name));
  for (const auto& r : records)
    if (r.step == step) return r.param_grad_norms[static_cast<std::size_t>(col - param_names.begin())];
  throw ConfigError("no telemetry record for step " + std::to_string(step));
}

void write_telemetry_csv(const TelemetryTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write telemetry: " + path.string());
  const auto head = std::find(trace.param_names.begin(), trace.param_names.end(), Model::kHeadWeight);
  const auto head_col = static_cast<std::size_t>(head - trace.param_names.begin());
  out << "step,loss,total_grad_norm,head_weight_grad_norm,max_param_abs";
  for (const auto& n : trace.param_names) out << ',' << n;
  out << '\n' << std::setprecision(10);
  for (const auto& r : trace.records) {
    out << r.step << ',' << r.loss << ',' << r.total_grad_norm << ','
        << (head_col < r.param_grad_norms.size() ? r.param_grad_norms[head_col] : 0.0) << ','
        << r.max_param_abs;
    for (double g : r.param_grad_norms) out << ',' << g;
    out << '\n';
  }
}

bool detect_dead(const TelemetryTrace& trace, const RunResult& result, std::size_t num_classes) {
  if (trace.records.size() < 2 * kDeadWindow || num_classes < 2) return false;
  const double uniform = std::log(static_cast<double>(num_classes));
  double loss_dev = 0.0, grad = 0.0;
  for (auto it = trace.records.end() - kDeadWindow; it != trace.records.end(); ++it) {
    loss_dev += std::abs(it->loss - uniform);
    grad += it->total_grad_norm;
  }
  loss_dev /= kDeadWindow;
  grad /= kDeadWindow;
  return loss_dev <= kDeadLossBand && grad <= kDeadGradNorm &&
         result.test_accuracy <= 1.0 / static_cast<double>(num_classes) + kDeadAccMargin;
}

Model build_model(const TrainConfig& cfg, const Dataset& ds) {
  FamilySpec spec = FamilySpec::of(cfg.family, cfg.activation, cfg.width, ds.channels, ds.length, ds.classes);
  spec.hidden = cfg.hidden;
  return Model::build(spec);
}

double accuracy(const Model& model, const ParamStore& params, const ViewedSplit& split) {
  if (split.size() == 0) return 0.0;
  constexpr std::size_t kChunk = 256;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < split.size(); start += kChunk) {
    const std::size_t end = std::min(split.size(), start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tape tape;
    const Tensor& logits = tape.value(model.forward(tape, params, gather(split, idx)));
    const std::size_t C = logits.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const double* row = logits.data.data() + b * C;
      const auto pred = static_cast<std::size_t>(std::max_element(row, row + C) - row);
      correct += pred == split.labels[start + b];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

namespace {

// Per-class index pools drawn without replacement and reshuffled when exhausted.
class StratifiedSampler {
 public:
  StratifiedSampler(const ViewedSplit& split, std::size_t classes, Rng rng) : rng_(rng) {
    pools_.resize(classes);
    for (std::size_t i = 0; i < split.size(); ++i) pools_[split.labels[i]].push_back(i);
    for (const auto& p : pools_)
      if (p.empty()) throw ConfigError("training split lacks a class");
    cursor_.assign(classes, 0);
    for (auto& p : pools_) shuffle(p);
  }

  void next(std::size_t batch_size, std::vector<std::size_t>& idx, std::vector<std::size_t>& labels) {
    const std::size_t per = std::max<std::size_t>(1, batch_size / pools_.size());
    idx.clear();
    labels.clear();
    for (std::size_t c = 0; c < pools_.size(); ++c)
      for (std::size_t j = 0; j < per; ++j) {
        if (cursor_[c] == pools_[c].size()) {
          shuffle(pools_[c]);
          cursor_[c] = 0;
        }
        idx.push_back(pools_[c][cursor_[c]++]);
        labels.push_back(c);
      }
  }

 private:
  void shuffle(std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng_.below(i)]);
  }
  Rng rng_;
  std::vector<std::vector<std::size_t>> pools_;
  std::vector<std::size_t> cursor_;
};

bool keep_record(std::size_t step, std::size_t last) {
  return step <= kTelemetryDenseSteps || step % kTelemetrySparseEvery == 0 || step == last;
}

}  // namespace

RunOutput train_run(const TrainConfig& cfg, const ViewedDataset& data, const Model& model) {
  cfg.validate();
  if (data.view != model.spec().view || data.classes != model.spec().classes)
    throw ConfigError("train_run: dataset view/classes do not match the model");

  RunOutput out;
  RunResult& res = out.result;
  res.cost = model.cost();
  res.width = model.width();
  res.hidden = model.hidden();

  ParamStore params = model.init_params(mix_seed(cfg.seed, 0xA11));
  for (const auto& e : params.layout()) out.trace.param_names.push_back(e.name);
  AdamState adam;
  StratifiedSampler sampler(data.train, data.classes, Rng::stream(cfg.seed, 0xBA7C));
  std::vector<std::size_t> idx, labels;
  const auto& layout = params.layout();

  for (std::size_t s = 0; s <= cfg.steps; ++s) {
    sampler.next(cfg.batch_size, idx, labels);
    Tape tape;
    cross_entropy_loss(tape, model.forward(tape, params, gather(data.train, idx)), labels);
    const double loss = tape.value(tape.size() - 1).data[0];
    const auto grads = backward(tape, params);

    TelemetryRecord rec;
    rec.step = s;
    rec.loss = loss;
    double total = 0.0;
    for (const auto& e : layout) {
      double sq = 0.0;
      for (std::size_t i = e.offset; i < e.offset + e.length; ++i) sq += grads[i] * grads[i];
      total += sq;
      rec.param_grad_norms.push_back(std::sqrt(sq));
    }
    rec.total_grad_norm = std::sqrt(total);
    for (double v : params.values()) rec.max_param_abs = std::max(rec.max_param_abs, std::abs(v));
    const bool finite = std::isfinite(loss) && std::isfinite(rec.total_grad_norm);
    if (keep_record(s, cfg.steps) || !finite) out.trace.records.push_back(rec);
    res.final_train_loss = loss;

    if (!finite) {
      res.dead = true;
      res.dead_reason = "diverged";
      break;
    }
    if (s < cfg.steps && !adamw_step(params, grads, adam, cfg)) {
      res.dead = true;
      res.dead_reason = "diverged";
      break;
    }
  }

  if (out.trace.records.size() > 1) res.step1_head_grad = out.trace.records[1].param_grad_norms.empty()
                                                               ? 0.0
                                                               : out.trace.head_grad_norm(1);
  res.val_accuracy = accuracy(model, params, data.val);
  res.test_accuracy = accuracy(model, params, data.test);
  if (!res.dead && detect_dead(out.trace, res, data.classes)) {
    res.dead = true;
    res.dead_reason = "collapsed";
  }
  return out;
}

double model_gradient_check(const Model& model, const ParamStore& params, const Tensor& x,
                            std::span<const std::size_t> labels, double h) {
  Tape tape;
  cross_entropy_loss(tape, model.forward(tape, params, x), labels);
  const auto analytic = backward(tape, params);
  ParamStore probe = params;
  auto loss = [&](std::span<const double> theta) {
    std::copy(theta.begin(), theta.end(), probe.values().begin());
    Tape t;
    cross_entropy_loss(t, model.forward(t, probe, x), labels);
    return t.value(t.size() - 1).data[0];
  };
  return finite_diff_check(loss, params.values(), analytic, h);
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"betas", {cfg.beta1, cfg.beta2}},
          {"eps", cfg.eps},
          {"weight_decay", cfg.weight_decay},
          {"batch_size", cfg.batch_size},
          {"steps", cfg.steps},
          {"seed", cfg.seed},
          {"activation", std::string(to_string(cfg.activation))},
          {"family", std::string(to_string(cfg.family))},
          {"view", std::string(to_string(family_view(cfg.family)))},
          {"width", cfg.width},
          {"hidden", cfg.hidden}};
}

nlohmann::json to_json(const RunResult& r) {
  return {{"final_train_loss", r.final_train_loss},
          {"val_accuracy", r.val_accuracy},
          {"test_accuracy", r.test_accuracy},
          {"dead", r.dead},
          {"dead_reason", r.dead_reason},
          {"telemetry_path", r.telemetry_path},
          {"width", r.width},
          {"hidden", r.hidden},
          {"step1_head_grad", r.step1_head_grad},
          {"cost", {{"param_count", r.cost.param_count}, {"flops_per_forward", r.cost.flops_per_forward}}}};
}

}  // namespace cxbench
