#include "cxbench/rfgen.hpp"

#include <cmath>

#include "cxbench/errors.hpp"

namespace cxbench {

std::string_view to_string(Modulation m) noexcept {
  switch (m) {
    case Modulation::bpsk: return "BPSK";
    case Modulation::qpsk: return "QPSK";
    case Modulation::psk8: return "8PSK";
    case Modulation::qam16: return "QAM16";
    case Modulation::qam32: return "QAM32";
    case Modulation::qam64: return "QAM64";
  }
  return "?";
}

std::string_view to_string(RfTask t) noexcept {
  switch (t) {
    case RfTask::psk_only: return "psk_only";
    case RfTask::qam_only: return "qam_only";
    case RfTask::mixed: return "mixed";
    case RfTask::low_snr_psk: return "low_snr_psk";
    case RfTask::high_snr_psk: return "high_snr_psk";
    case RfTask::unit_mag_mixed: return "unit_mag_mixed";
    case RfTask::fixed_rotation_psk: return "fixed_rotation_psk";
    case RfTask::rotation_aug_psk: return "rotation_aug_psk";
    case RfTask::awgn_replication: return "awgn_replication";
  }
  return "?";
}

RfTask rf_task_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(RfTask::awgn_replication); ++i)
    if (to_string(static_cast<RfTask>(i)) == name) return static_cast<RfTask>(i);
  throw ConfigError("unknown rf condition: " + std::string(name));
}

std::vector<Modulation> class_set(RfTask task) {
  switch (task) {
    case RfTask::qam_only: return {Modulation::qam16, Modulation::qam32, Modulation::qam64};
    case RfTask::mixed:
    case RfTask::unit_mag_mixed:
      return {Modulation::bpsk, Modulation::qpsk, Modulation::psk8, Modulation::qam16, Modulation::qam64};
    default: return {Modulation::bpsk, Modulation::qpsk, Modulation::psk8};
  }
}

RfCondition RfCondition::defaults(RfTask task, std::uint64_t seed) {
  RfCondition c;
  c.task = task;
  c.seed = seed;
  switch (task) {
    case RfTask::low_snr_psk: c.snr_db = {-6.0}; break;
    case RfTask::high_snr_psk: c.snr_db = {18.0}; break;
    case RfTask::unit_mag_mixed: c.normalization = Normalization::unit_magnitude; break;
    case RfTask::fixed_rotation_psk: c.test_rotation = RotationKind::fixed; break;
    case RfTask::rotation_aug_psk:
      c.rotation = RotationKind::random_per_sample;
      c.test_rotation = RotationKind::fixed;
      break;
    case RfTask::awgn_replication:
      c.snr_db.assign(std::begin(kReplicationSnrs), std::end(kReplicationSnrs));
      break;
    default: break;
  }
  return c;
}

void RfCondition::validate() const {
  if (snr_db.empty()) throw ConfigError("rf condition needs at least one snr");
  for (double s : snr_db)
    if (!(s >= -10.0 && s <= 18.0)) throw ConfigError("snr_db outside [-10, 18]");
  if (length < 1) throw ConfigError("rf length must be positive");
  if (n_train < 1 || n_val < 1 || n_test < 1) throw ConfigError("rf split sizes must be positive");
}

namespace {

const char* name_of(RotationKind k) {
  return k == RotationKind::none ? "none" : k == RotationKind::fixed ? "fixed" : "random_per_sample";
}

}  // namespace

nlohmann::json RfCondition::to_json() const {
  return {{"task", std::string(to_string(task))},
          {"snr_db", snr_db},
          {"normalization", normalization == Normalization::unit_power ? "unit_power" : "unit_magnitude"},
          {"train_rotation", name_of(rotation)},
          {"eval_rotation", name_of(test_rotation)},
          {"phi", phi},
          {"T", length},
          {"seed", seed},
          {"n_per_class", {{"train", n_train}, {"val", n_val}, {"test", n_test}}}};
}

std::vector<Cplx> constellation(Modulation m) {
  std::vector<Cplx> pts;
  auto psk = [&](int M) {
    for (int k = 0; k < M; ++k) pts.push_back(std::polar(1.0, 2.0 * kPi * k / M));
  };
  auto grid = [&](int side, bool drop_corners) {
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        const bool corner = (i == 0 || i == side - 1) && (j == 0 || j == side - 1);
        if (drop_corners && corner) continue;
        pts.emplace_back(2.0 * i - (side - 1), 2.0 * j - (side - 1));
      }
    double power = 0.0;
    for (Cplx z : pts) power += std::norm(z);
    const double s = 1.0 / std::sqrt(power / static_cast<double>(pts.size()));
    for (Cplx& z : pts) z *= s;
  };
  switch (m) {
    case Modulation::bpsk: psk(2); break;
    case Modulation::qpsk: psk(4); break;
    case Modulation::psk8: psk(8); break;
    case Modulation::qam16: grid(4, false); break;
    case Modulation::qam32: grid(6, true); break;
    case Modulation::qam64: grid(8, false); break;
  }
  return pts;
}

std::vector<Cplx> gen_symbols(Modulation m, std::size_t n, Rng& rng) {
  const auto pts = constellation(m);
  std::vector<Cplx> out(n);
  for (auto& z : out) z = pts[rng.below(pts.size())];
  return out;
}

std::vector<Cplx> add_awgn(std::span<const Cplx> x, double snr_db, Rng& rng) {
  const double sd = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
  std::vector<Cplx> out(x.begin(), x.end());
  for (auto& z : out) {
    const double re = rng.normal(0.0, sd);
    const double im = rng.normal(0.0, sd);
    z += Cplx(re, im);
  }
  return out;
}

std::vector<Cplx> normalize(std::span<const Cplx> x, Normalization mode) {
  double power = 0.0;
  for (Cplx z : x) power += std::norm(z);
  if (x.empty() || power == 0.0) throw DegenerateInput("normalize: all-zero sequence");
  std::vector<Cplx> out(x.begin(), x.end());
  if (mode == Normalization::unit_power) {
    const double s = 1.0 / std::sqrt(power / static_cast<double>(x.size()));
    for (auto& z : out) z *= s;
  } else {
    for (auto& z : out)
      if (const double a = std::abs(z); a > 0.0) z /= a;
  }
  return out;
}

Dataset make_dataset(const RfCondition& cond) {
  cond.validate();
  const auto classes = class_set(cond.task);
  Dataset ds;
  ds.domain = "rf";
  ds.channels = 1;
  ds.length = cond.length;
  ds.classes = classes.size();
  for (auto m : classes) ds.class_names.emplace_back(to_string(m));
  ds.meta = {{"condition", cond.to_json()}};

  const std::size_t counts[3] = {cond.n_train, cond.n_val, cond.n_test};
  std::vector<ComplexSeq>* splits[3] = {&ds.train, &ds.val, &ds.test};
  for (std::size_t s = 0; s < 3; ++s) {
    const RotationKind rot = s == 0 ? cond.rotation : cond.test_rotation;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      Rng rng = Rng::stream(mix_seed(cond.seed, s), c);
      for (std::size_t i = 0; i < counts[s]; ++i) {
        auto x = gen_symbols(classes[c], cond.length, rng);
        if (rot == RotationKind::fixed) x = rotate(x, cond.phi);
        if (rot == RotationKind::random_per_sample) x = rotate(x, rng.uniform(0.0, 2.0 * kPi));
        const double snr = cond.snr_db.size() == 1 ? cond.snr_db[0] : cond.snr_db[rng.below(cond.snr_db.size())];
        x = normalize(add_awgn(x, snr, rng), cond.normalization);
        splits[s]->push_back({std::move(x), static_cast<std::uint8_t>(c)});
      }
    }
    Rng order = Rng::stream(mix_seed(cond.seed, s), 0x5A0F);
    shuffle(*splits[s], order);
  }
  return ds;
}

}  // namespace cxbench
