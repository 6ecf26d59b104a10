#include "cxbench/qmgen.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "cxbench/errors.hpp"

namespace cxbench {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftPair {
  fftw_plan forward = nullptr, inverse = nullptr;
  std::vector<Cplx> buf;

  explicit FftPair(std::size_t n) : buf(n) {
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    inverse = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPair() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;
};

}  // namespace

double Wavefunction::norm() const {
  double s = 0.0;
  for (Cplx z : psi) s += std::norm(z);
  return std::sqrt(s * dx);
}

std::vector<double> grid_points(std::size_t n, double half_width) {
  std::vector<double> x(n);
  const double dx = 2.0 * half_width / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = -half_width + static_cast<double>(j) * dx;
  return x;
}

Wavefunction wavepacket(double center, double width, double k, double phi0, std::size_t n,
                        double half_width) {
  if (!(width > 0.0)) throw ConfigError("wavepacket width must be positive");
  Wavefunction w;
  w.dx = 2.0 * half_width / static_cast<double>(n);
  const auto x = grid_points(n, half_width);
  w.psi.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = (x[j] - center) / width;
    w.psi[j] = std::polar(std::exp(-0.5 * u * u), k * x[j] + phi0);
  }
  const double nrm = w.norm();
  for (Cplx& z : w.psi) z /= nrm;
  return w;
}

double momentum_of_class(std::size_t k_class) {
  static constexpr double kMultiples[] = {-3.0, -1.0, 1.0, 3.0};
  if (k_class >= 4) throw ConfigError("momentum class must be in 0..3");
  return kMultiples[k_class] * kMomentumUnit;
}

Wavefunction gen_wavepacket(std::size_t k_class, Rng& rng) {
  const double k = momentum_of_class(k_class);
  const double center = rng.uniform(-3.0, 3.0);
  const double width = rng.uniform(0.8, 1.6);
  const double phi0 = rng.uniform(0.0, kTwoPi);
  Wavefunction w = wavepacket(center, width, k, phi0);
  w.label = static_cast<std::uint8_t>(k_class);
  return w;
}

std::string_view to_string(PotentialKind k) noexcept {
  switch (k) {
    case PotentialKind::free: return "free";
    case PotentialKind::harmonic: return "harmonic";
    case PotentialKind::linear_ramp: return "linear_ramp";
    case PotentialKind::square_barrier: return "square_barrier";
    case PotentialKind::double_well: return "double_well";
  }
  return "?";
}

double PotentialFamily::operator()(double x) const {
  switch (kind) {
    case PotentialKind::free: return 0.0;
    case PotentialKind::harmonic: return 0.5 * strength * strength * x * x;
    case PotentialKind::linear_ramp: return strength * x;
    case PotentialKind::square_barrier: return std::abs(x) < scale ? strength : 0.0;
    case PotentialKind::double_well: {
      const double a = (x - scale), b = (x + scale);
      return -strength * (std::exp(-a * a) + std::exp(-b * b));
    }
  }
  return 0.0;
}

// Ranges keep every family's max |V| on [-8, 8] at or below 8.
PotentialFamily PotentialFamily::sample(PotentialKind kind, Rng& rng) {
  PotentialFamily v;
  v.kind = kind;
  switch (kind) {
    case PotentialKind::free: break;
    case PotentialKind::harmonic: v.strength = rng.uniform(0.3, 0.5); break;
    case PotentialKind::linear_ramp: v.strength = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0); break;
    case PotentialKind::square_barrier:
      v.strength = rng.uniform(3.0, 8.0);
      v.scale = rng.uniform(0.5, 1.5);
      break;
    case PotentialKind::double_well:
      v.strength = rng.uniform(3.0, 7.5);
      v.scale = rng.uniform(1.5, 2.5);
      break;
  }
  return v;
}

double max_sampled_potential() { return 8.0; }

double default_dt() { return kStabilityGuard / max_sampled_potential(); }

Wavefunction split_step_evolve(const Wavefunction& psi, const PotentialFamily& v, double dt,
                               std::size_t steps) {
  const std::size_t n = psi.psi.size();
  if (n == 0) throw ConfigError("split_step_evolve: empty wavefunction");
  const double half_width = 0.5 * psi.dx * static_cast<double>(n);
  const auto x = grid_points(n, half_width);
  std::vector<double> pot(n);
  double vmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    pot[j] = v(x[j]);
    vmax = std::max(vmax, std::abs(pot[j]));
  }
  if (!(dt > 0.0) || dt * vmax > kStabilityGuard)
    throw ConfigError("split_step_evolve: stability guard dt*max|V| <= " + std::to_string(kStabilityGuard) +
                      " violated");

  // Frequencies in standard DFT order: 0, 1, ..., n/2 - 1, -n/2, ..., -1.
  std::vector<Cplx> half_v(n), kinetic(n);
  const double dk = kTwoPi / (static_cast<double>(n) * psi.dx);
  for (std::size_t j = 0; j < n; ++j) {
    const double m = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    const double k = m * dk;
    kinetic[j] = std::polar(1.0 / static_cast<double>(n), -0.5 * k * k * dt);  // 1/n undoes FFTW's scaling
    half_v[j] = std::polar(1.0, -0.5 * pot[j] * dt);
  }

  FftPair fft(n);
  std::copy(psi.psi.begin(), psi.psi.end(), fft.buf.begin());
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t j = 0; j < n; ++j) fft.buf[j] *= half_v[j];
    fftw_execute(fft.forward);
    for (std::size_t j = 0; j < n; ++j) fft.buf[j] *= kinetic[j];
    fftw_execute(fft.inverse);
    for (std::size_t j = 0; j < n; ++j) fft.buf[j] *= half_v[j];
  }
  Wavefunction out = psi;
  out.psi = fft.buf;
  return out;
}

Wavefunction global_phase(const Wavefunction& psi, double phi) {
  Wavefunction out = psi;
  const Cplx r = std::polar(1.0, phi);
  for (Cplx& z : out.psi) z = cmul(r, z);
  return out;
}

std::string_view to_string(QuantumTask t) noexcept {
  switch (t) {
    case QuantumTask::momentum: return "momentum";
    case QuantumTask::potential_inverse: return "potential_inverse";
    case QuantumTask::global_shift: return "global_shift";
    case QuantumTask::global_aug: return "global_aug";
  }
  return "?";
}

QuantumTask quantum_task_from_string(std::string_view name) {
  for (auto t : {QuantumTask::momentum, QuantumTask::potential_inverse, QuantumTask::global_shift,
                 QuantumTask::global_aug})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown quantum condition: " + std::string(name));
}

Dataset make_quantum_dataset(QuantumTask task, const QuantumPreset& preset) {
  static constexpr PotentialKind kKinds[] = {PotentialKind::free, PotentialKind::harmonic,
                                             PotentialKind::linear_ramp, PotentialKind::square_barrier,
                                             PotentialKind::double_well};
  const bool momentum = task == QuantumTask::momentum;
  Dataset ds;
  ds.domain = "quantum";
  ds.channels = 1;
  ds.length = kGridPoints;
  ds.classes = momentum ? 4 : 5;
  if (momentum) {
    for (std::size_t c = 0; c < 4; ++c) ds.class_names.push_back("k=" + std::to_string(momentum_of_class(c)));
  } else {
    for (auto k : kKinds) ds.class_names.emplace_back(to_string(k));
  }
  const double dt = default_dt();
  ds.meta = {{"condition",
              {{"task", std::string(to_string(task))},
               {"seed", preset.seed},
               {"N", kGridPoints},
               {"domain", {-kDomainHalfWidth, kDomainHalfWidth}},
               {"momentum_unit", kMomentumUnit},
               {"dt", dt},
               {"steps", kEvolutionSteps},
               {"potentials", ds.class_names},
               {"shift_phi", task == QuantumTask::global_shift ? preset.shift_phi : 0.0},
               {"n_per_class", {{"train", preset.n_train}, {"val", preset.n_val}, {"test", preset.n_test}}}}}};

  const std::size_t counts[3] = {preset.n_train, preset.n_val, preset.n_test};
  std::vector<ComplexSeq>* splits[3] = {&ds.train, &ds.val, &ds.test};
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t c = 0; c < ds.classes; ++c) {
      Rng rng = Rng::stream(mix_seed(preset.seed, 0x9000 + s), c);
      for (std::size_t i = 0; i < counts[s]; ++i) {
        Wavefunction w;
        if (momentum) {
          w = gen_wavepacket(c, rng);
        } else {
          const double center = rng.uniform(-2.0, 2.0);
          const double width = rng.uniform(0.8, 1.6);
          const double k0 = rng.uniform(-1.0, 1.0);
          const auto v = PotentialFamily::sample(kKinds[c], rng);
          w = split_step_evolve(wavepacket(center, width, k0, 0.0), v, dt, kEvolutionSteps);
          if (task == QuantumTask::global_shift && s > 0) w = global_phase(w, preset.shift_phi);
          if (task == QuantumTask::global_aug && s == 0) w = global_phase(w, rng.uniform(0.0, kTwoPi));
        }
        splits[s]->push_back({std::move(w.psi), static_cast<std::uint8_t>(c)});
      }
    }
    Rng order = Rng::stream(mix_seed(preset.seed, 0x9000 + s), 0x5A0F);
    shuffle(*splits[s], order);
  }
  return ds;
}

}  // namespace cxbench
