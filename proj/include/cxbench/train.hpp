#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cxbench/dataset.hpp"
#include "cxbench/families.hpp"
#include "cxbench/wirtinger.hpp"

namespace cxbench {

/// -log softmax(logits)[label], computed with the log-sum-exp shift.
double cross_entropy(std::span<const double> logits, std::size_t label);

/// Mean cross-entropy over a [B, C] logits node -> scalar node.
NodeId cross_entropy_loss(Tape& tape, NodeId logits, std::span<const std::size_t> labels);

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::size_t batch_size = 64;
  std::size_t steps = 400;
  std::uint64_t seed = 0;
  ActivationId activation = ActivationId::crelu;
  Family family = Family::complex;
  std::size_t width = 32;
  std::size_t hidden = 0;  // head hidden units; 0 follows the width

  void validate() const;
};

struct AdamState {
  std::vector<double> m, v;
};

/// One AdamW update (bias-corrected moments, decoupled weight decay).
/// Returns false and leaves everything untouched if any gradient is non-finite.
bool adamw_step(ParamStore& params, std::span<const double> grads, AdamState& state,
                const TrainConfig& cfg);

inline constexpr std::size_t kTelemetryDenseSteps = 200;
inline constexpr std::size_t kTelemetrySparseEvery = 10;

struct TelemetryRecord {
  std::size_t step = 0;  // number of optimizer updates applied before this forward pass
  double loss = 0.0;
  double total_grad_norm = 0.0;
  std::vector<double> param_grad_norms;  // aligned with TelemetryTrace::param_names
  double max_param_abs = 0.0;
};

struct TelemetryTrace {
  std::vector<std::string> param_names;
  std::vector<TelemetryRecord> records;

  /// Gradient norm of the named group at the recorded step (throws if absent).
  double grad_norm(std::size_t step, std::string_view name) const;
  double head_grad_norm(std::size_t step) const { return grad_norm(step, Model::kHeadWeight); }
};

void write_telemetry_csv(const TelemetryTrace& trace, const std::filesystem::path& path);

struct RunResult {
  double final_train_loss = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  bool dead = false;
  std::string dead_reason;  // "", "collapsed" or "diverged"
  std::string telemetry_path;
  CostReport cost;
  std::size_t width = 0;
  std::size_t hidden = 0;
  double step1_head_grad = 0.0;
};

struct RunOutput {
  RunResult result;
  TelemetryTrace trace;
};

inline constexpr std::size_t kDeadWindow = 20;
inline constexpr double kDeadLossBand = 0.02;
inline constexpr double kDeadGradNorm = 1e-3;
inline constexpr double kDeadAccMargin = 0.05;

/// Collapse to uniform prediction over the final kDeadWindow records.
bool detect_dead(const TelemetryTrace& trace, const RunResult& result, std::size_t num_classes);

/// Model for a config on a dataset's shape.
Model build_model(const TrainConfig& cfg, const Dataset& ds);

/// Full training run. Telemetry step s is recorded after s AdamW updates, so
/// step 0 is the initialisation and step `cfg.steps` the final parameters.
/// Batches are class-stratified: floor(B / C) samples of every class per step.
RunOutput train_run(const TrainConfig& cfg, const ViewedDataset& data, const Model& model);

/// Accuracy of argmax logits over a split, evaluated in chunks.
double accuracy(const Model& model, const ParamStore& params, const ViewedSplit& split);

/// finite_diff_check of the mean cross-entropy of `model` on (x, labels).
double model_gradient_check(const Model& model, const ParamStore& params, const Tensor& x,
                            std::span<const std::size_t> labels, double h = 1e-6);

nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const RunResult& r);

}  // namespace cxbench
