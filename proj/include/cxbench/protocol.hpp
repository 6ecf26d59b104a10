#pragma once

// Sweep orchestration: the shared 16-trial search space, sweep records,
// the two selection rules, paired-t gaps, dead-seed tallies and the
// learning-rate x activation factorial.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cxbench/train.hpp"

namespace cxbench {

inline constexpr std::size_t kTrialCount = 16;
inline constexpr double kLrMin = 1e-3;
inline constexpr double kLrMax = 5e-2;
inline constexpr double kUnstableLr = 2.2e-2;
inline constexpr double kStableLr = 3e-3;
inline constexpr std::size_t kWidthChoices[] = {16, 32, 64, 96};
inline constexpr std::size_t kBatchChoices[] = {32, 64, 128};
inline constexpr double kWeightDecayChoices[] = {1e-4, 1e-3, 1e-2};

struct Trial {
  std::size_t index = 0;
  double lr = 1e-3;
  std::size_t width = 32;
  std::size_t batch_size = 64;
  double weight_decay = 0.01;

  /// Copies the trial's hyperparameters into a run config.
  void apply(TrainConfig& cfg) const;
};

struct SearchSpace {
  std::uint64_t master_seed = 0;
  std::vector<Trial> trials;
};

/// 16 trials drawn from the search box. The whole list is redrawn until it
/// holds at least one lr >= kUnstableLr and one lr <= kStableLr.
SearchSpace build_search_space(std::uint64_t master_seed);

struct SweepRecord {
  std::string condition;  // dataset condition; empty for single-dataset sweeps
  Family family = Family::complex;
  ActivationId activation = ActivationId::crelu;
  std::size_t trial = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  bool dead = false;
  double step1_head_grad = 0.0;
  std::size_t width = 0;
  std::int64_t param_count = 0;
};

void write_records_csv(std::span<const SweepRecord> records, const std::filesystem::path& path);
std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path);

enum class SelectionRule { matched_shared, independent };
std::string_view to_string(SelectionRule r) noexcept;

struct FamilySelection {
  Family family = Family::complex;
  std::size_t trial = 0;
  double mean_val = 0.0;
  double mean_test = 0.0;
  double std_test = 0.0;  // sample std across seeds
  std::size_t dead = 0;
  std::size_t runs = 0;
};

struct GapRow {
  Family baseline = Family::real_stacked;
  double mean = 0.0;  // complex - baseline, test accuracy
  double half_width = 0.0;
  std::size_t pairs = 0;
};

struct SelectionReport {
  SelectionRule rule = SelectionRule::matched_shared;
  std::size_t anchor_trial = 0;  // the complex family's own best trial
  std::vector<FamilySelection> families;
  std::vector<GapRow> gaps;
  Family best_real = Family::real_stacked;
  double complex_score = 0.0;
  double best_real_score = 0.0;
  double gap = 0.0;
  std::size_t real_dead = 0;
  std::size_t real_runs = 0;
};

/// Selection over a complete (family x trial x seed) grid of one condition and
/// activation. Trials are ranked by mean validation accuracy over seeds, ties
/// to the lower index. Throws ProtocolError listing missing or duplicated cells.
SelectionReport select(std::span<const SweepRecord> records, SelectionRule rule);

nlohmann::json to_json(const SelectionReport& report);

struct PairedCi {
  double mean = 0.0;
  double half_width = 0.0;
};

/// mean +- t(0.975, n-1) s / sqrt(n). Needs n >= 2.
PairedCi paired_ci(std::span<const double> diffs);

struct Tally {
  std::size_t dead = 0;
  std::size_t total = 0;
};

Tally dead_tally(std::span<const SweepRecord> records,
                 const std::function<bool(const SweepRecord&)>& filter);

inline constexpr Family kRealTelemetryFamilies[] = {Family::real_stacked, Family::real_param_matched,
                                                   Family::real_flop_matched};

/// Runs fn(0..count-1) on up to `jobs` threads. The first exception is rethrown
/// after all workers stop.
void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct FactorialCell {
  ActivationId activation = ActivationId::crelu;
  double lr = 0.0;
  std::size_t dead = 0;
  std::size_t total = 0;
  double max_step1_head_grad = 0.0;
};

struct FactorialConfig {
  TrainConfig base;  // every field but lr and activation is held fixed
  std::vector<ActivationId> activations{ActivationId::crelu, ActivationId::zrelu};
  std::vector<double> lrs{0.0236, 0.0024};
  std::vector<std::uint64_t> seeds{0, 1, 2};  // training seeds; records carry their index
  std::size_t jobs = 1;
};

struct FactorialOutput {
  std::vector<FactorialCell> cells;  // activation-major
  std::vector<SweepRecord> records;
};

/// Trains the three real telemetry families per cell and seed on `ds`.
FactorialOutput factorial(const Dataset& ds, const FactorialConfig& cfg);

void write_factorial_csv(std::span<const FactorialCell> cells, const std::filesystem::path& path);

}  // namespace cxbench
