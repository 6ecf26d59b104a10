#include "cxbench/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "cxbench/errors.hpp"
#include "cxbench/rng.hpp"

namespace cxbench {

void Trial::apply(TrainConfig& cfg) const {
  cfg.lr = lr;
  cfg.width = width;
  cfg.batch_size = batch_size;
  cfg.weight_decay = weight_decay;
}

SearchSpace build_search_space(std::uint64_t master_seed) {
  Rng rng = Rng::stream(master_seed, 0x5EA7C4);
  SearchSpace space;
  space.master_seed = master_seed;
  const double lo = std::log(kLrMin), hi = std::log(kLrMax);
  for (;;) {
    space.trials.clear();
    bool unstable = false, stable = false;
    for (std::size_t i = 0; i < kTrialCount; ++i) {
      Trial t;
      t.index = i;
      t.lr = std::exp(rng.uniform(lo, hi));
      t.width = kWidthChoices[rng.below(std::size(kWidthChoices))];
      t.batch_size = kBatchChoices[rng.below(std::size(kBatchChoices))];
      t.weight_decay = kWeightDecayChoices[rng.below(std::size(kWeightDecayChoices))];
      unstable |= t.lr >= kUnstableLr;
      stable |= t.lr <= kStableLr;
      space.trials.push_back(t);
    }
    if (unstable && stable) return space;
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kRecordHeader =
    "condition,family,activation,trial,lr,seed,val_accuracy,test_accuracy,dead,step1_head_grad,width,param_count";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

void write_records_csv(std::span<const SweepRecord> records, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << kRecordHeader << '\n';
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%zu,%.6g,%llu,%.6f,%.6f,%d,%.6g,%zu,%lld\n", r.condition.c_str(),
                  std::string(to_string(r.family)).c_str(), std::string(to_string(r.activation)).c_str(),
                  r.trial, r.lr, static_cast<unsigned long long>(r.seed), r.val_accuracy, r.test_accuracy,
                  r.dead ? 1 : 0, r.step1_head_grad, r.width, static_cast<long long>(r.param_count));
    f << buf;
  }
}

std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ProtocolError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kRecordHeader) throw ProtocolError("unexpected records header in " + path.string());
  std::vector<SweepRecord> out;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 12) throw ProtocolError("malformed record at line " + std::to_string(lineno));
    try {
      SweepRecord r;
      r.condition = c[0];
      r.family = family_from_string(c[1]);
      r.activation = activation_from_string(c[2]);
      r.trial = std::stoul(c[3]);
      r.lr = std::stod(c[4]);
      r.seed = std::stoull(c[5]);
      r.val_accuracy = std::stod(c[6]);
      r.test_accuracy = std::stod(c[7]);
      r.dead = c[8] == "1";
      r.step1_head_grad = std::stod(c[9]);
      r.width = std::stoul(c[10]);
      r.param_count = std::stoll(c[11]);
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ProtocolError("malformed record at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SelectionRule r) noexcept {
  return r == SelectionRule::matched_shared ? "matched_shared" : "independent";
}

SelectionReport select(std::span<const SweepRecord> records, SelectionRule rule) {
  if (records.empty()) throw ProtocolError("no records to select from");
  for (const auto& r : records)
    if (r.condition != records[0].condition || r.activation != records[0].activation)
      throw ProtocolError("select: records mix conditions or activations");

  std::set<Family> families;
  std::set<std::size_t> trials;
  std::set<std::uint64_t> seeds;
  std::map<std::tuple<Family, std::size_t, std::uint64_t>, const SweepRecord*> cell;
  std::vector<std::string> problems;
  for (const auto& r : records) {
    families.insert(r.family);
    trials.insert(r.trial);
    seeds.insert(r.seed);
    if (!cell.emplace(std::tuple{r.family, r.trial, r.seed}, &r).second)
      problems.push_back("duplicate " + std::string(to_string(r.family)) + "/trial " + std::to_string(r.trial) +
                         "/seed " + std::to_string(r.seed));
  }
  if (!families.contains(Family::complex)) throw ProtocolError("select: no complex family records");
  for (Family f : families)
    for (std::size_t t : trials)
      for (std::uint64_t s : seeds)
        if (!cell.contains({f, t, s}))
          problems.push_back("missing " + std::string(to_string(f)) + "/trial " + std::to_string(t) + "/seed " +
                             std::to_string(s));
  if (!problems.empty()) {
    std::string msg = "incomplete sweep grid:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ProtocolError(msg);
  }

  auto column = [&](Family f, std::size_t t, bool val) {
    std::vector<double> v;
    for (std::uint64_t s : seeds) {
      const SweepRecord* r = cell.at({f, t, s});
      v.push_back(val ? r->val_accuracy : r->test_accuracy);
    }
    return v;
  };
  auto best_trial = [&](Family f) {
    std::size_t best = *trials.begin();
    double best_val = -1.0;
    for (std::size_t t : trials) {
      const double v = mean_of(column(f, t, true));
      if (v > best_val) {
        best_val = v;
        best = t;
      }
    }
    return best;
  };

  SelectionReport rep;
  rep.rule = rule;
  rep.anchor_trial = best_trial(Family::complex);
  std::map<Family, std::vector<double>> chosen_test;
  for (Family f : families) {
    FamilySelection fs;
    fs.family = f;
    fs.trial = rule == SelectionRule::matched_shared ? rep.anchor_trial : best_trial(f);
    const auto test = column(f, fs.trial, false);
    fs.mean_val = mean_of(column(f, fs.trial, true));
    fs.mean_test = mean_of(test);
    fs.std_test = sample_std(test);
    for (std::uint64_t s : seeds) fs.dead += cell.at({f, fs.trial, s})->dead ? 1 : 0;
    fs.runs = seeds.size();
    chosen_test[f] = test;
    rep.families.push_back(fs);
  }

  const auto& cx = chosen_test.at(Family::complex);
  bool have_real = false;
  for (const auto& fs : rep.families) {
    if (fs.family == Family::complex) {
      rep.complex_score = fs.mean_test;
      continue;
    }
    if (is_complex_family(fs.family)) continue;
    if (!have_real || fs.mean_test > rep.best_real_score) {
      rep.best_real = fs.family;
      rep.best_real_score = fs.mean_test;
      have_real = true;
    }
    rep.real_dead += fs.dead;
    rep.real_runs += fs.runs;
    std::vector<double> diffs;
    const auto& base = chosen_test.at(fs.family);
    for (std::size_t i = 0; i < cx.size(); ++i) diffs.push_back(cx[i] - base[i]);
    GapRow g;
    g.baseline = fs.family;
    g.pairs = diffs.size();
    if (diffs.size() >= 2) {
      const auto ci = paired_ci(diffs);
      g.mean = ci.mean;
      g.half_width = ci.half_width;
    } else {
      g.mean = mean_of(diffs);
    }
    rep.gaps.push_back(g);
  }
  rep.gap = have_real ? rep.complex_score - rep.best_real_score : 0.0;
  return rep;
}

nlohmann::json to_json(const SelectionReport& r) {
  nlohmann::json fams = nlohmann::json::array();
  for (const auto& f : r.families)
    fams.push_back({{"family", std::string(to_string(f.family))},
                    {"trial", f.trial},
                    {"mean_val", f.mean_val},
                    {"mean_test", f.mean_test},
                    {"std_test", f.std_test},
                    {"dead", f.dead},
                    {"runs", f.runs}});
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : r.gaps)
    gaps.push_back({{"baseline", std::string(to_string(g.baseline))},
                    {"mean", g.mean},
                    {"half_width", g.half_width},
                    {"pairs", g.pairs}});
  return {{"rule", std::string(to_string(r.rule))},
          {"anchor_trial", r.anchor_trial},
          {"families", fams},
          {"gaps", gaps},
          {"complex", r.complex_score},
          {"best_real", std::string(to_string(r.best_real))},
          {"best_real_score", r.best_real_score},
          {"gap", r.gap},
          {"real_dead", r.real_dead},
          {"real_runs", r.real_runs}};
}

PairedCi paired_ci(std::span<const double> diffs) {
  const std::size_t n = diffs.size();
  if (n < 2) throw StatsError("paired_ci needs at least two paired differences");
  const std::vector<double> v(diffs.begin(), diffs.end());
  const double sd = sample_std(v);
  boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(dist, 0.975);
  return {mean_of(v), t * sd / std::sqrt(static_cast<double>(n))};
}

Tally dead_tally(std::span<const SweepRecord> records, const std::function<bool(const SweepRecord&)>& filter) {
  Tally t;
  for (const auto& r : records) {
    if (filter && !filter(r)) continue;
    ++t.total;
    t.dead += r.dead ? 1 : 0;
  }
  return t;
}

// ---------------------------------------------------------------------------

void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  workers.clear();
  if (error) std::rethrow_exception(error);
}

FactorialOutput factorial(const Dataset& ds, const FactorialConfig& cfg) {
  struct Job {
    std::size_t cell;
    Family family;
    std::size_t seed;  // index into cfg.seeds
  };
  std::vector<Job> jobs;
  FactorialOutput out;
  for (ActivationId act : cfg.activations)
    for (double lr : cfg.lrs) {
      out.cells.push_back({act, lr, 0, 0, 0.0});
      for (Family f : kRealTelemetryFamilies)
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({out.cells.size() - 1, f, s});
    }

  out.records.resize(jobs.size());
  run_parallel(jobs.size(), cfg.jobs, [&](std::size_t i) {
    const Job& j = jobs[i];
    const FactorialCell& c = out.cells[j.cell];
    TrainConfig tc = cfg.base;
    tc.lr = c.lr;
    tc.activation = c.activation;
    tc.family = j.family;
    tc.seed = cfg.seeds[j.seed];
    const Model model = build_model(tc, ds);
    const RunOutput run = train_run(tc, materialize(ds, family_view(j.family)), model);
    SweepRecord& r = out.records[i];
    r.condition = "factorial";
    r.family = j.family;
    r.activation = c.activation;
    r.trial = j.cell;
    r.lr = c.lr;
    r.seed = j.seed;
    r.val_accuracy = run.result.val_accuracy;
    r.test_accuracy = run.result.test_accuracy;
    r.dead = run.result.dead;
    r.step1_head_grad = run.result.step1_head_grad;
    r.width = run.result.width;
    r.param_count = run.result.cost.param_count;
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    FactorialCell& c = out.cells[jobs[i].cell];
    const SweepRecord& r = out.records[i];
    ++c.total;
    c.dead += r.dead ? 1 : 0;
    c.max_step1_head_grad = std::max(c.max_step1_head_grad, r.step1_head_grad);
  }
  return out;
}

void write_factorial_csv(std::span<const FactorialCell> cells, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << "activation,lr,dead,total,max_step1_head_grad\n";
  char buf[256];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%s,%.6g,%zu,%zu,%.6g\n", std::string(to_string(c.activation)).c_str(), c.lr,
                  c.dead, c.total, c.max_step1_head_grad);
    f << buf;
  }
}

}  // namespace cxbench
