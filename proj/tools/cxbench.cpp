// cxbench command-line driver.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cxbench/errors.hpp"
#include "cxbench/suites.hpp"
#include "json.hpp"

#ifndef CXBENCH_VERSION
#define CXBENCH_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cxbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file " + path);
  try {
    json j = json::parse(f);
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

/// Master seed: flag, then CXBENCH_SEED, then config, then 0.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value, const json& cfg) {
  if (flag->count() > 0) return flag_value;
  if (const char* env = std::getenv("CXBENCH_SEED")) {
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw UsageError(std::string("CXBENCH_SEED is not an unsigned integer: ") + env);
    }
  }
  return cfg.value("seed", std::uint64_t{0});
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json config;
  std::vector<std::string> artifacts;
  std::string started = utc_now();

  void write(const fs::path& dir) const {
    const std::string resolved = config.dump();
    json m = {{"command", command},
              {"argv", argv},
              {"config", config},
              {"config_hash", hex64(fnv1a(resolved))},
              {"artifacts", artifacts},
              {"tool_version", CXBENCH_VERSION},
              {"started", started},
              {"finished", utc_now()}};
    std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
  }
};

std::vector<std::string> list_artifacts(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") out.push_back(e.path().filename().string());
  if (fs::exists(dir / "runs")) out.push_back("runs/");
  std::sort(out.begin(), out.end());
  return out;
}

template <class T>
void override_from(json& cfg, const char* key, const CLI::Option* opt, const T& value) {
  if (opt->count() > 0) cfg[key] = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representation-first benchmark for complex-valued networks"};
  app.set_version_flag("--version", std::string(CXBENCH_VERSION));
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  // gen -------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset file");
  std::string gen_domain, gen_condition, gen_out = "dataset.cxb", gen_config;
  std::uint64_t gen_seed = 0;
  gen->add_option("domain", gen_domain, "rf, quantum or eeg")->required();
  auto* gen_cond_opt = gen->add_option("--condition", gen_condition, "Task / stress condition name");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--out", gen_out, "Output dataset path");
  gen->add_option("--config", gen_config, "JSON config file");

  // train -----------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train one model on one generated condition");
  std::string tr_domain = "rf", tr_condition = "psk_only", tr_family = "complex", tr_activation = "crelu",
              tr_out = "run", tr_config;
  TrainConfig tr;
  std::uint64_t tr_seed = 0;
  auto* tr_domain_opt = train->add_option("--domain", tr_domain, "rf, quantum or eeg");
  auto* tr_cond_opt = train->add_option("--condition", tr_condition, "Task / stress condition name");
  auto* tr_family_opt = train->add_option("--family", tr_family, "Model family");
  auto* tr_act_opt = train->add_option("--activation", tr_activation, "Complex activation");
  auto* tr_lr_opt = train->add_option("--lr", tr.lr, "Learning rate");
  auto* tr_width_opt = train->add_option("--width", tr.width, "Conv width");
  auto* tr_hidden_opt = train->add_option("--hidden", tr.hidden, "Head hidden units (0 = width)");
  auto* tr_bs_opt = train->add_option("--batch-size", tr.batch_size, "Batch size");
  auto* tr_wd_opt = train->add_option("--weight-decay", tr.weight_decay, "AdamW weight decay");
  auto* tr_steps_opt = train->add_option("--steps", tr.steps, "Optimizer steps");
  auto* tr_seed_opt = train->add_option("--seed", tr_seed, "Seed for data and training");
  train->add_option("--out", tr_out, "Output directory");
  train->add_option("--config", tr_config, "JSON config file");

  // suite -----------------------------------------------------------------
  auto* suite = app.add_subcommand("suite", "Run a named experiment suite");
  std::string su_name, su_out, su_preset = "standard", su_activation = "crelu", su_config;
  std::uint64_t su_seed = 0;
  std::size_t su_jobs = 1;
  bool su_no_runs = false;
  suite->add_option("name", su_name, "rf_stress, quantum_pilot, eeg_pilot, replication, factorial or trilemma")
      ->required();
  suite->add_option("--out", su_out, "Sweep directory (default: sweeps/<name>)");
  auto* su_preset_opt = suite->add_option("--preset", su_preset, "standard or smoke");
  auto* su_seed_opt = suite->add_option("--seed", su_seed, "Master seed");
  auto* su_jobs_opt = suite->add_option("--jobs", su_jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  auto* su_act_opt = suite->add_option("--activation", su_activation, "Complex activation");
  suite->add_flag("--no-run-dirs", su_no_runs, "Skip per-run telemetry directories");
  suite->add_option("--config", su_config, "JSON config file");

  // select ----------------------------------------------------------------
  auto* sel = app.add_subcommand("select", "Apply both selection rules to a sweep");
  std::string sel_dir;
  sel->add_option("sweep_dir", sel_dir, "Sweep directory")->required();

  // report ----------------------------------------------------------------
  auto* rep = app.add_subcommand("report", "Emit report tables for a sweep");
  std::string rep_dir, rep_format = "md";
  rep->add_option("sweep_dir", rep_dir, "Sweep directory")->required();
  rep->add_option("--format", rep_format, "csv or md")->check(CLI::IsMember({"csv", "md"}));

  // trilemma --------------------------------------------------------------
  auto* tri = app.add_subcommand("trilemma", "CR-residual and boundedness scan of every complex activation");
  std::string tri_out = "trilemma";
  std::size_t tri_res = 121, tri_seeds = 8;
  double tri_extent = 3.0;
  tri->add_option("--out", tri_out, "Output directory");
  tri->add_option("--resolution", tri_res, "Grid points per axis")->check(CLI::Range(2, 4001));
  tri->add_option("--extent", tri_extent, "Grid half-width")->check(CLI::PositiveNumber);
  tri->add_option("--init-seeds", tri_seeds, "Initialisations for gradient-norm statistics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      json cfg = load_config(gen_config);
      override_from(cfg, "condition", gen_cond_opt, gen_condition);
      cfg["domain"] = gen_domain;
      cfg["seed"] = resolve_seed(gen_seed_opt, gen_seed, cfg);
      if (!cfg.contains("condition")) throw UsageError("gen: --condition is required");
      Dataset ds;
      try {
        ds = make_named_dataset(gen_domain, cfg["condition"].get<std::string>(), cfg["seed"].get<std::uint64_t>());
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
      const fs::path out(gen_out);
      const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
      fs::create_directories(dir);
      write_dataset(ds, out);
      Manifest m{"gen", args, cfg, {out.filename().string()}};
      m.write(dir);
      std::cout << "wrote " << out.string() << " (" << ds.train.size() + ds.val.size() + ds.test.size()
                << " sequences, " << ds.classes << " classes)\n";
      return kExitOk;
    }

    if (*train) {
      json cfg = load_config(tr_config);
      override_from(cfg, "domain", tr_domain_opt, tr_domain);
      override_from(cfg, "condition", tr_cond_opt, tr_condition);
      override_from(cfg, "family", tr_family_opt, tr_family);
      override_from(cfg, "activation", tr_act_opt, tr_activation);
      override_from(cfg, "lr", tr_lr_opt, tr.lr);
      override_from(cfg, "width", tr_width_opt, tr.width);
      override_from(cfg, "hidden", tr_hidden_opt, tr.hidden);
      override_from(cfg, "batch_size", tr_bs_opt, tr.batch_size);
      override_from(cfg, "weight_decay", tr_wd_opt, tr.weight_decay);
      override_from(cfg, "steps", tr_steps_opt, tr.steps);
      cfg["seed"] = resolve_seed(tr_seed_opt, tr_seed, cfg);
      TrainConfig c;
      try {
        c.lr = cfg.value("lr", c.lr);
        c.width = cfg.value("width", c.width);
        c.hidden = cfg.value("hidden", c.hidden);
        c.batch_size = cfg.value("batch_size", c.batch_size);
        c.weight_decay = cfg.value("weight_decay", c.weight_decay);
        c.steps = cfg.value("steps", c.steps);
        c.seed = cfg["seed"].get<std::uint64_t>();
        c.family = family_from_string(cfg.value("family", tr_family));
        c.activation = activation_from_string(cfg.value("activation", tr_activation));
        c.validate();
        cfg = {{"domain", cfg.value("domain", tr_domain)},
               {"condition", cfg.value("condition", tr_condition)},
               {"train", to_json(c)}};
      } catch (const json::exception& e) {
        throw UsageError(std::string("train config: ") + e.what());
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
      Dataset ds;
      try {
        ds = make_named_dataset(cfg["domain"].get<std::string>(), cfg["condition"].get<std::string>(), c.seed);
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
      const fs::path dir(tr_out);
      fs::create_directories(dir);
      const Model model = build_model(c, ds);
      RunOutput run = train_run(c, materialize(ds, family_view(c.family)), model);
      write_telemetry_csv(run.trace, dir / "telemetry.csv");
      run.result.telemetry_path = "telemetry.csv";
      std::ofstream(dir / "result.json") << json{{"config", cfg}, {"result", to_json(run.result)}}.dump(2) << '\n';
      Manifest m{"train", args, cfg, list_artifacts(dir)};
      m.write(dir);
      std::cout << to_string(c.family) << ": val " << run.result.val_accuracy << ", test " << run.result.test_accuracy
                << (run.result.dead ? " [dead: " + run.result.dead_reason + "]" : std::string()) << '\n';
      return run.result.dead_reason == "diverged" ? kExitFailure : kExitOk;
    }

    if (*suite) {
      json cfg = load_config(su_config);
      SuiteOptions opts;
      override_from(cfg, "preset", su_preset_opt, su_preset);
      override_from(cfg, "jobs", su_jobs_opt, su_jobs);
      override_from(cfg, "activation", su_act_opt, su_activation);
      try {
        opts.preset = cfg.value("preset", std::string("standard"));
        opts.jobs = cfg.value("jobs", std::size_t{1});
        opts.activation = activation_from_string(cfg.value("activation", std::string("crelu")));
        opts.seed = resolve_seed(su_seed_opt, su_seed, cfg);
        opts.write_runs = !su_no_runs;
        json overrides = cfg;
        for (const char* k : {"preset", "jobs", "activation", "seed"}) overrides.erase(k);
        opts.overrides = overrides;
        cfg = resolve_suite_config(su_name, opts);
      } catch (const json::exception& e) {
        throw UsageError(std::string("suite config: ") + e.what());
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
      if (opts.jobs == 0) throw UsageError("--jobs must be positive");
      const fs::path dir = su_out.empty() ? fs::path("sweeps") / su_name : fs::path(su_out);
      const SuiteOutcome outcome = run_suite(su_name, opts, dir);
      Manifest m{"suite", args, cfg, list_artifacts(dir)};
      m.write(dir);
      for (const auto& f : outcome.failures) std::cerr << "failed: " << f << '\n';
      std::cout << su_name << ": " << outcome.records.size() << " runs -> " << dir.string() << '\n';
      if (!outcome.failures.empty() || outcome.diverged) return kExitFailure;
      return kExitOk;
    }

    if (*sel) {
      const fs::path dir(sel_dir);
      if (!fs::exists(dir / "records.csv")) throw UsageError("no records.csv in " + dir.string());
      const auto records = read_records_csv(dir / "records.csv");
      write_selections(records, dir);
      Manifest m{"select", args, {{"sweep_dir", sel_dir}}, list_artifacts(dir)};
      m.write(dir);
      return kExitOk;
    }

    if (*rep) {
      const fs::path dir(rep_dir);
      if (!fs::is_directory(dir)) throw UsageError("not a directory: " + rep_dir);
      std::vector<fs::path> written;
      try {
        written = write_report(dir, rep_format == "md");
      } catch (const ProtocolError& e) {
        throw UsageError(e.what());
      }
      for (const auto& p : written) std::cout << p.string() << '\n';
      Manifest m{"report", args, {{"sweep_dir", rep_dir}, {"format", rep_format}}, list_artifacts(dir)};
      m.write(dir);
      if (rep_format == "md" && fs::exists(dir / "report.md")) std::cout << '\n' << std::ifstream(dir / "report.md").rdbuf();
      return kExitOk;
    }

    if (*tri) {
      const fs::path dir(tri_out);
      fs::create_directories(dir);
      const auto grid = square_grid(tri_res, tri_extent);
      std::vector<std::uint64_t> seeds(tri_seeds);
      for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
      std::vector<TrilemmaReport> reports;
      for (ActivationId id : kComplexActivations) reports.push_back(trilemma_scan(id, grid, seeds));
      write_trilemma_csv(reports, dir / "trilemma.csv");
      Manifest m{"trilemma",
                 args,
                 {{"grid_resolution", tri_res}, {"grid_extent", tri_extent}, {"init_seeds", tri_seeds}},
                 list_artifacts(dir)};
      m.write(dir);
      std::cout << csv_to_markdown(dir / "trilemma.csv");
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
