#pragma once

// Named experiment suites and the reports derived from their records.
//
// Sweep directory layout:
//   records.csv                  one row per (condition, family, trial, seed)
//   selection_matched.json       multi-trial suites only
//   selection_independent.json
//   factorial.csv                factorial suite only
//   trilemma.csv                 trilemma suite only
//   runs/<condition>/<family>/t<trial>_s<seed>/{telemetry.csv,result.json}

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cxbench/protocol.hpp"

namespace cxbench {

inline constexpr std::string_view kSuiteNames[] = {"rf_stress", "replication", "quantum_pilot",
                                                   "eeg_pilot", "factorial",   "trilemma"};

/// Wide readout used by the replication and factorial suites.
inline constexpr std::size_t kWideHidden = 1024;

/// Dataset of a named condition: domain "rf", "quantum" or "eeg".
Dataset make_named_dataset(std::string_view domain, std::string_view condition, std::uint64_t seed);

struct SuiteOptions {
  std::string preset = "standard";  // "standard" or "smoke"
  std::uint64_t seed = 0;           // master seed
  std::size_t jobs = 1;
  ActivationId activation = ActivationId::crelu;
  /// Optional overrides: steps, lr, width, hidden, batch_size, weight_decay,
  /// seeds (count), conditions (array of names), families (array of names).
  nlohmann::json overrides = nlohmann::json::object();
  bool write_runs = true;
};

struct SuiteOutcome {
  std::vector<SweepRecord> records;
  std::vector<std::string> failures;  // grid holes, one line each
  bool diverged = false;              // some run diverged
};

/// Runs the named suite into out_dir (created if needed) and writes its
/// records and reports. Reports are skipped when the grid has holes.
SuiteOutcome run_suite(std::string_view name, const SuiteOptions& opts, const std::filesystem::path& out_dir);

/// The resolved configuration of a suite (defaults of the preset plus overrides).
nlohmann::json resolve_suite_config(std::string_view name, const SuiteOptions& opts);

/// Writes selection_matched.json / selection_independent.json for every
/// (condition, activation) group of a multi-trial sweep that contains the complex family.
void write_selections(std::span<const SweepRecord> records, const std::filesystem::path& dir);

/// Emits the CSV report tables for a sweep directory, plus markdown renderings
/// of them when `markdown` is set. Throws ProtocolError on a missing or incomplete sweep.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& sweep_dir, bool markdown);

/// Markdown table rendering of a CSV file.
std::string csv_to_markdown(const std::filesystem::path& csv);

void write_trilemma_csv(std::span<const TrilemmaReport> reports, const std::filesystem::path& path);

}  // namespace cxbench
