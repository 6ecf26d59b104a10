#include "cxbench/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>

#include "cxbench/eeggen.hpp"
#include "cxbench/errors.hpp"
#include "cxbench/qmgen.hpp"
#include "cxbench/rfgen.hpp"
#include "cxbench/rng.hpp"

namespace cxbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kAllFamilies = {"complex",         "real_stacked", "real_param_matched",
                                               "real_flop_matched", "real_polar", "real_phase",
                                               "real_magnitude"};
const std::vector<std::string> kPilotFamilies = {"complex", "real_stacked", "real_phase", "real_polar",
                                                 "real_magnitude"};
const std::vector<std::string> kTelemetryFamilies = {"complex", "real_stacked", "real_param_matched",
                                                     "real_flop_matched"};

std::string domain_of(std::string_view suite) {
  if (suite == "quantum_pilot") return "quantum";
  if (suite == "eeg_pilot") return "eeg";
  return "rf";
}

std::vector<std::string> rf_stress_conditions() {
  std::vector<std::string> out;
  for (RfTask t : kStressConditions) out.emplace_back(to_string(t));
  return out;
}

json suite_defaults(std::string_view name, bool smoke) {
  json d = {{"lr", 3e-3}, {"width", 32}, {"hidden", 0}, {"batch_size", 64}, {"weight_decay", 0.01}};
  if (name == "rf_stress") {
    d.update({{"steps", 400}, {"seeds", 6}, {"conditions", rf_stress_conditions()}, {"families", kAllFamilies}});
  } else if (name == "quantum_pilot") {
    d.update({{"steps", 140},
              {"seeds", 3},
              {"conditions", {"momentum", "potential_inverse", "global_shift", "global_aug"}},
              {"families", kPilotFamilies}});
  } else if (name == "eeg_pilot") {
    d.update({{"steps", 120},
              {"seeds", 3},
              {"conditions", {"phase_locking", "amplitude_event", "pac", "reference_shift", "reference_aug"}},
              {"families", kPilotFamilies}});
  } else if (name == "replication") {
    d = {{"steps", 200},
         {"seeds", 3},
         {"hidden", kWideHidden},
         {"conditions", {"awgn_replication"}},
         {"families", kTelemetryFamilies}};
  } else if (name == "factorial") {
    d = {{"steps", 200},
         {"seeds", 3},
         {"width", 64},
         {"hidden", kWideHidden},
         {"batch_size", 64},
         {"weight_decay", 0.01},
         {"lrs", {0.0236, 0.0024}},
         {"activations", {"crelu", "zrelu"}},
         {"conditions", {"awgn_replication"}}};
  } else if (name == "trilemma") {
    d = {{"grid_resolution", 121}, {"grid_extent", 3.0}, {"init_seeds", 8}};
  } else {
    throw ConfigError("unknown suite: " + std::string(name));
  }
  if (smoke) {
    if (name == "trilemma") {
      d["grid_resolution"] = 41;
      d["init_seeds"] = 2;
    } else if (name == "factorial") {
      d.update({{"steps", 40}, {"seeds", 1}, {"width", 8}, {"hidden", 32}});
    } else if (name == "replication") {
      d.update({{"steps", 10}, {"seeds", 2}, {"width", 8}, {"hidden", 32}});
    } else {
      d.update({{"steps", 20}, {"seeds", 1}, {"width", 8}});
    }
  }
  return d;
}

TrainConfig base_config(const json& c) {
  TrainConfig t;
  t.steps = c.at("steps").get<std::size_t>();
  if (c.contains("lr")) t.lr = c.at("lr").get<double>();
  if (c.contains("width")) t.width = c.at("width").get<std::size_t>();
  if (c.contains("hidden")) t.hidden = c.at("hidden").get<std::size_t>();
  if (c.contains("batch_size")) t.batch_size = c.at("batch_size").get<std::size_t>();
  if (c.contains("weight_decay")) t.weight_decay = c.at("weight_decay").get<double>();
  return t;
}

std::uint64_t data_seed(std::uint64_t master, std::size_t s) { return mix_seed(master, 2 * s); }
std::uint64_t train_seed(std::uint64_t master, std::size_t s) { return mix_seed(master, 2 * s + 1); }

struct Job {
  std::size_t dataset = 0;
  std::string condition;
  TrainConfig cfg;
  std::size_t trial = 0;
  std::size_t seed_index = 0;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void execute(const std::vector<Job>& jobs, const std::vector<Dataset>& datasets, const SuiteOptions& opts,
             const fs::path& out_dir, SuiteOutcome& outcome) {
  std::vector<std::optional<SweepRecord>> slots(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::vector<char> diverged(jobs.size(), 0);
  run_parallel(jobs.size(), opts.jobs, [&](std::size_t i) {
    const Job& j = jobs[i];
    const Dataset& ds = datasets[j.dataset];
    try {
      const Model model = build_model(j.cfg, ds);
      RunOutput run = train_run(j.cfg, materialize(ds, family_view(j.cfg.family)), model);
      if (opts.write_runs) {
        const fs::path rel = fs::path("runs") / j.condition / std::string(to_string(j.cfg.family)) /
                             ("t" + std::to_string(j.trial) + "_s" + std::to_string(j.seed_index));
        fs::create_directories(out_dir / rel);
        write_telemetry_csv(run.trace, out_dir / rel / "telemetry.csv");
        run.result.telemetry_path = (rel / "telemetry.csv").generic_string();
        std::ofstream(out_dir / rel / "result.json")
            << json{{"condition", j.condition},
                    {"trial", j.trial},
                    {"seed_index", j.seed_index},
                    {"config", to_json(j.cfg)},
                    {"result", to_json(run.result)}}
                   .dump(2)
            << '\n';
      }
      SweepRecord r;
      r.condition = j.condition;
      r.family = j.cfg.family;
      r.activation = j.cfg.activation;
      r.trial = j.trial;
      r.lr = j.cfg.lr;
      r.seed = j.seed_index;
      r.val_accuracy = run.result.val_accuracy;
      r.test_accuracy = run.result.test_accuracy;
      r.dead = run.result.dead;
      r.step1_head_grad = run.result.step1_head_grad;
      r.width = run.result.width;
      r.param_count = run.result.cost.param_count;
      diverged[i] = run.result.dead_reason == "diverged";
      slots[i] = std::move(r);
    } catch (const std::exception& e) {
      errors[i] = j.condition + "/" + std::string(to_string(j.cfg.family)) + "/trial " + std::to_string(j.trial) +
                  "/seed " + std::to_string(j.seed_index) + ": " + e.what();
    }
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (slots[i]) outcome.records.push_back(std::move(*slots[i]));
    if (!errors[i].empty()) outcome.failures.push_back(errors[i]);
    outcome.diverged |= diverged[i] != 0;
  }
}

std::vector<Dataset> build_datasets(const std::string& domain, const std::vector<std::string>& conditions,
                                    std::size_t seeds, std::uint64_t master) {
  std::vector<Dataset> out;
  for (const auto& c : conditions)
    for (std::size_t s = 0; s < seeds; ++s) out.push_back(make_named_dataset(domain, c, data_seed(master, s)));
  return out;
}

void run_trilemma(const json& c, const fs::path& out_dir) {
  const auto grid = square_grid(c.at("grid_resolution").get<std::size_t>(), c.at("grid_extent").get<double>());
  std::vector<std::uint64_t> seeds(c.at("init_seeds").get<std::size_t>());
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
  std::vector<TrilemmaReport> reports;
  for (ActivationId id : kComplexActivations) reports.push_back(trilemma_scan(id, grid, seeds));
  write_trilemma_csv(reports, out_dir / "trilemma.csv");
}

// --- reports ---------------------------------------------------------------

struct GroupKey {
  std::string condition;
  ActivationId activation;
  bool operator<(const GroupKey& o) const {
    return std::tie(condition, activation) < std::tie(o.condition, o.activation);
  }
};

std::vector<std::pair<GroupKey, std::vector<SweepRecord>>> group_records(std::span<const SweepRecord> records) {
  std::vector<std::pair<GroupKey, std::vector<SweepRecord>>> groups;
  std::map<GroupKey, std::size_t> index;
  for (const auto& r : records) {
    const GroupKey k{r.condition, r.activation};
    auto [it, fresh] = index.emplace(k, groups.size());
    if (fresh) groups.push_back({k, {}});
    groups[it->second].second.push_back(r);
  }
  return groups;
}

bool has_family(const std::vector<SweepRecord>& rs, Family f) {
  return std::any_of(rs.begin(), rs.end(), [f](const SweepRecord& r) { return r.family == f; });
}

std::size_t trial_count(const std::vector<SweepRecord>& rs) {
  std::set<std::size_t> t;
  for (const auto& r : rs) t.insert(r.trial);
  return t.size();
}

std::string selection_file(SelectionRule rule, const GroupKey& k, bool single) {
  std::string name = rule == SelectionRule::matched_shared ? "selection_matched" : "selection_independent";
  if (!single) name += "_" + k.condition + "_" + std::string(to_string(k.activation));
  return name + ".json";
}

class CsvWriter {
 public:
  CsvWriter(fs::path path, const std::string& header) : path_(std::move(path)) { out_ << header << '\n'; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    ++rows_;
  }
  bool empty() const { return rows_ == 0; }
  const fs::path& path() const { return path_; }
  void save() const {
    std::ofstream f(path_);
    if (!f) throw ConfigError("cannot write " + path_.string());
    f << out_.str();
  }

 private:
  fs::path path_;
  std::ostringstream out_;
  std::size_t rows_ = 0;
};

}  // namespace

Dataset make_named_dataset(std::string_view domain, std::string_view condition, std::uint64_t seed) {
  if (domain == "rf") return make_dataset(RfCondition::defaults(rf_task_from_string(condition), seed));
  if (domain == "quantum") {
    QuantumPreset p;
    p.seed = seed;
    return make_quantum_dataset(quantum_task_from_string(condition), p);
  }
  if (domain == "eeg") {
    EegPreset p;
    p.seed = seed;
    return make_eeg_dataset(eeg_task_from_string(condition), p);
  }
  throw ConfigError("unknown domain: " + std::string(domain));
}

json resolve_suite_config(std::string_view name, const SuiteOptions& opts) {
  if (opts.preset != "standard" && opts.preset != "smoke") throw ConfigError("unknown preset: " + opts.preset);
  json c = suite_defaults(name, opts.preset == "smoke");
  if (!opts.overrides.is_null()) {
    if (!opts.overrides.is_object()) throw ConfigError("suite overrides must be a JSON object");
    for (const auto& [k, v] : opts.overrides.items()) {
      if (!c.contains(k) && k != "lr" && k != "width" && k != "hidden" && k != "batch_size" && k != "weight_decay")
        throw ConfigError("suite " + std::string(name) + " does not take option '" + k + "'");
      c[k] = v;
    }
  }
  c["suite"] = name;
  c["preset"] = opts.preset;
  c["seed"] = opts.seed;
  if (name != "trilemma" && name != "factorial") c["activation"] = std::string(to_string(opts.activation));
  if (name == "replication") {
    json trials = json::array();
    for (const auto& t : build_search_space(opts.seed).trials)
      trials.push_back({{"index", t.index},
                        {"lr", t.lr},
                        {"width", t.width},
                        {"batch_size", t.batch_size},
                        {"weight_decay", t.weight_decay}});
    c["trials"] = trials;
  }
  return c;
}

SuiteOutcome run_suite(std::string_view name, const SuiteOptions& opts, const fs::path& out_dir) {
  const json c = resolve_suite_config(name, opts);
  fs::create_directories(out_dir);
  SuiteOutcome outcome;
  if (name == "trilemma") {
    run_trilemma(c, out_dir);
    write_report(out_dir, true);
    return outcome;
  }

  const auto conditions = c.at("conditions").get<std::vector<std::string>>();
  const auto seeds = c.at("seeds").get<std::size_t>();
  if (seeds == 0 || conditions.empty()) throw ConfigError("suite needs at least one seed and one condition");
  const std::string domain = domain_of(name);
  const std::vector<Dataset> datasets = build_datasets(domain, conditions, seeds, opts.seed);
  const TrainConfig base = base_config(c);

  std::vector<Job> jobs;
  auto add = [&](std::size_t ci, const std::string& cond, TrainConfig cfg, std::size_t trial, std::size_t s) {
    cfg.seed = train_seed(opts.seed, s);
    cfg.validate();
    jobs.push_back({ci * seeds + s, cond, cfg, trial, s});
  };

  if (name == "factorial") {
    FactorialConfig fc;
    fc.base = base;
    fc.lrs = c.at("lrs").get<std::vector<double>>();
    fc.activations.clear();
    for (const auto& a : c.at("activations")) fc.activations.push_back(activation_from_string(a.get<std::string>()));
    fc.seeds.clear();
    for (std::size_t s = 0; s < seeds; ++s) fc.seeds.push_back(train_seed(opts.seed, s));
    fc.jobs = opts.jobs;
    const FactorialOutput fo = factorial(datasets.front(), fc);
    outcome.records = fo.records;
    write_records_csv(outcome.records, out_dir / "records.csv");
    write_factorial_csv(fo.cells, out_dir / "factorial.csv");
    write_report(out_dir, true);
    return outcome;
  }
  {
    const auto families = c.at("families").get<std::vector<std::string>>();
    std::vector<Trial> trials;
    if (name == "replication") {
      for (const auto& t : c.at("trials")) {
        Trial tr;
        tr.index = t.at("index").get<std::size_t>();
        tr.lr = t.at("lr").get<double>();
        tr.width = t.at("width").get<std::size_t>();
        tr.batch_size = t.at("batch_size").get<std::size_t>();
        tr.weight_decay = t.at("weight_decay").get<double>();
        trials.push_back(tr);
      }
    } else {
      trials.push_back({0, base.lr, base.width, base.batch_size, base.weight_decay});
    }
    for (std::size_t ci = 0; ci < conditions.size(); ++ci)
      for (const auto& t : trials)
        for (const auto& fam : families)
          for (std::size_t s = 0; s < seeds; ++s) {
            TrainConfig cfg = base;
            t.apply(cfg);
            // smoke presets shrink every trial
            if (opts.preset == "smoke" || opts.overrides.contains("width")) cfg.width = base.width;
            cfg.family = family_from_string(fam);
            cfg.activation = opts.activation;
            add(ci, conditions[ci], cfg, t.index, s);
          }
  }

  execute(jobs, datasets, opts, out_dir, outcome);
  write_records_csv(outcome.records, out_dir / "records.csv");
  if (!outcome.failures.empty()) {
    std::ofstream f(out_dir / "failures.txt");
    for (const auto& e : outcome.failures) f << e << '\n';
    return outcome;
  }
  if (name == "replication") write_selections(outcome.records, out_dir);
  write_report(out_dir, true);
  return outcome;
}

void write_selections(std::span<const SweepRecord> records, const fs::path& dir) {
  const auto groups = group_records(records);
  for (const auto& [key, rs] : groups) {
    if (!has_family(rs, Family::complex) || trial_count(rs) < 2) continue;
    for (SelectionRule rule : {SelectionRule::matched_shared, SelectionRule::independent}) {
      json j = to_json(select(rs, rule));
      j["condition"] = key.condition;
      j["activation"] = std::string(to_string(key.activation));
      std::ofstream(dir / selection_file(rule, key, groups.size() == 1)) << j.dump(2) << '\n';
    }
  }
}

std::vector<fs::path> write_report(const fs::path& dir, bool markdown) {
  std::vector<fs::path> written;
  const bool has_records = fs::exists(dir / "records.csv");
  const bool has_trilemma = fs::exists(dir / "trilemma.csv");
  if (!has_records && !has_trilemma) throw ProtocolError("no sweep found in " + dir.string());

  std::vector<fs::path> tables;
  if (has_trilemma) tables.push_back(dir / "trilemma.csv");
  if (has_records) {
    const auto records = read_records_csv(dir / "records.csv");
    if (records.empty()) throw ProtocolError("sweep in " + dir.string() + " has no records");
    if (fs::exists(dir / "failures.txt")) throw ProtocolError("sweep in " + dir.string() + " has failed runs");

    CsvWriter accuracy(dir / "accuracy.csv", "condition,activation,family,trial,mean_test,std_test,dead,runs");
    CsvWriter selection(dir / "selection.csv",
                        "condition,activation,rule,anchor_trial,anchor_lr,complex,best_real,best_real_score,gap_pp,"
                        "real_dead,real_runs");
    CsvWriter gaps(dir / "gaps.csv", "condition,activation,rule,baseline,trial,mean_pp,half_width_pp,pairs");
    CsvWriter cells(dir / "factorial_cells.csv", "activation,lr,dead,total,max_step1_head_grad");
    std::vector<std::string> grid_families;
    std::vector<std::pair<std::string, std::map<std::string, double>>> grid_rows;

    for (const auto& [key, rs] : group_records(records)) {
      const std::string act(to_string(key.activation));
      if (!has_family(rs, Family::complex)) {
        std::map<double, std::vector<const SweepRecord*>> by_lr;
        for (const auto& r : rs) by_lr[r.lr].push_back(&r);
        for (auto it = by_lr.rbegin(); it != by_lr.rend(); ++it) {
          std::size_t dead = 0;
          double h1 = 0.0;
          for (const auto* r : it->second) {
            dead += r->dead ? 1 : 0;
            h1 = std::max(h1, r->step1_head_grad);
          }
          cells.row({act, fmt("%.6g", it->first), std::to_string(dead), std::to_string(it->second.size()),
                     fmt("%.4g", h1)});
        }
        continue;
      }
      if (trial_count(rs) > 1) {
        for (SelectionRule rule : {SelectionRule::matched_shared, SelectionRule::independent}) {
          const SelectionReport rep = select(rs, rule);
          double anchor_lr = 0.0;
          for (const auto& r : rs)
            if (r.family == Family::complex && r.trial == rep.anchor_trial) anchor_lr = r.lr;
          const std::string rule_name(to_string(rule));
          selection.row({key.condition, act, rule_name, std::to_string(rep.anchor_trial), fmt("%.6g", anchor_lr),
                         fmt("%.4f", rep.complex_score), std::string(to_string(rep.best_real)),
                         fmt("%.4f", rep.best_real_score), fmt("%.2f", 100.0 * rep.gap),
                         std::to_string(rep.real_dead), std::to_string(rep.real_runs)});
          for (const auto& g : rep.gaps) {
            std::size_t trial = 0;
            for (const auto& f : rep.families)
              if (f.family == g.baseline) trial = f.trial;
            gaps.row({key.condition, act, rule_name, std::string(to_string(g.baseline)), std::to_string(trial),
                      fmt("%.2f", 100.0 * g.mean), fmt("%.2f", 100.0 * g.half_width), std::to_string(g.pairs)});
          }
        }
        continue;
      }
      // single-trial group: per-family accuracy, grid must be complete
      const SelectionReport rep = select(rs, SelectionRule::independent);
      std::map<std::string, double> row;
      for (const auto& f : rep.families) {
        const std::string fam(to_string(f.family));
        accuracy.row({key.condition, act, fam, std::to_string(f.trial), fmt("%.4f", f.mean_test),
                      fmt("%.4f", f.std_test), std::to_string(f.dead), std::to_string(f.runs)});
        row[fam] = f.mean_test;
        if (std::find(grid_families.begin(), grid_families.end(), fam) == grid_families.end())
          grid_families.push_back(fam);
      }
      grid_rows.push_back({key.condition, row});
    }

    for (CsvWriter* w : {&accuracy, &selection, &gaps, &cells}) {
      if (w->empty()) continue;
      w->save();
      tables.push_back(w->path());
    }
    if (!grid_rows.empty()) {
      std::string header = "condition,best";
      for (const auto& f : grid_families) header += "," + f;
      CsvWriter grid(dir / "accuracy_grid.csv", header);
      for (const auto& [cond, row] : grid_rows) {
        std::string best;
        double best_acc = -1.0;
        for (const auto& f : grid_families)
          if (row.contains(f) && row.at(f) > best_acc) {
            best_acc = row.at(f);
            best = f;
          }
        std::vector<std::string> cellsv{cond, best};
        for (const auto& f : grid_families) cellsv.push_back(row.contains(f) ? fmt("%.4f", row.at(f)) : "");
        grid.row(cellsv);
      }
      grid.save();
      tables.push_back(grid.path());
    }
    if (fs::exists(dir / "factorial.csv")) tables.push_back(dir / "factorial.csv");
  }

  written = tables;
  if (markdown) {
    std::ofstream md(dir / "report.md");
    for (const auto& t : tables) md << "## " << t.stem().string() << "\n\n" << csv_to_markdown(t) << '\n';
    written.push_back(dir / "report.md");
  }
  return written;
}

std::string csv_to_markdown(const fs::path& csv) {
  std::ifstream f(csv);
  if (!f) throw ProtocolError("cannot read " + csv.string());
  std::ostringstream md;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::size_t n = 0;
    md << '|';
    while (std::getline(ss, cell, ',')) {
      md << ' ' << cell << " |";
      ++n;
    }
    if (!line.empty() && line.back() == ',') {
      md << "  |";
      ++n;
    }
    md << '\n';
    if (header) {
      md << '|';
      for (std::size_t i = 0; i < n; ++i) md << " --- |";
      md << '\n';
      header = false;
    }
  }
  return md.str();
}

void write_trilemma_csv(std::span<const TrilemmaReport> reports, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << "activation,cr_median,cr_p95,max_abs,bounded_on_grid,samples,grad_norm_mean,grad_norm_std\n";
  char buf[512];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.6g,%d,%zu,%.6g,%.6g\n",
                  std::string(to_string(r.activation)).c_str(), r.cr_median, r.cr_p95, r.max_abs,
                  r.bounded_on_grid ? 1 : 0, r.samples, r.grad_norm_mean, r.grad_norm_std);
    f << buf;
  }
}

}  // namespace cxbench
