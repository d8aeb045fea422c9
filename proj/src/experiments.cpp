#include "alfven/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include "alfven/errors.hpp"
#include "alfven/io.hpp"
#include "alfven/model1d.hpp"

#ifndef ALFVEN_VERSION
#define ALFVEN_VERSION "unknown"
#endif

namespace alfven {

namespace fs = std::filesystem;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void say(const ExperimentConfig& cfg, const char* fmt, auto... args) {
  if (!cfg.verbose) return;
  std::fprintf(stderr, "[%s] ", to_string(cfg.kind));
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

bool is_3d(ExperimentKind k) { return k != ExperimentKind::model1d; }

const PacketSpec* first_packet(const ExperimentConfig& cfg, Species sp) {
  for (const auto& p : cfg.packets)
    if (p.species == sp) return &p;
  return nullptr;
}

double sup_abs_relative(const std::vector<double>& v, double ref) {
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x - ref));
  return ref != 0.0 ? worst / std::abs(ref) : worst;
}

// sup over the run divided by the max over the early window; 0/0 counts as 0.
double decay_bound(const NormSeries& s, double t_early_end, double NormSample::*field) {
  double early = 0.0, all = 0.0;
  const double t0 = s.samples.empty() ? 0.0 : s.samples.front().t;
  for (const auto& x : s.samples) {
    all = std::max(all, x.*field);
    if (std::abs(x.t - t0) <= std::abs(t_early_end - t0) + 1e-12) early = std::max(early, x.*field);
  }
  if (all == 0.0) return 0.0;
  return early > 0.0 ? all / early : inf;
}

RunManifest start_manifest(const ExperimentConfig& cfg) {
  RunManifest m;
  m.kind = to_string(cfg.kind);
  m.version = ALFVEN_VERSION;
  m.config_source = cfg.source;
  for (std::size_t i = 0; i < cfg.packets.size(); ++i) m.seeds.push_back(packet_seed(cfg, i));
  if (m.seeds.empty()) m.seeds.push_back(cfg.seed);
  return m;
}

StepperConfig stepper_to(const ExperimentConfig& cfg, double t_from, double t_end) {
  StepperConfig sc = cfg.stepper;
  sc.t_end = t_end;
  sc.direction = t_end >= t_from ? Direction::forward : Direction::backward;
  return sc;
}

double state_distance(const ElsasserState& a, const ElsasserState& b) {
  return std::max(max_abs(a.z_plus - b.z_plus), max_abs(a.z_minus - b.z_minus));
}

double data_norm_total(const ElsasserState& s, int k_max) {
  return data_norm(s, Species::plus, k_max) + data_norm(s, Species::minus, k_max);
}

double spread(const std::vector<double>& v) {
  std::vector<double> pos;
  for (double x : v)
    if (x > 0.0 && std::isfinite(x)) pos.push_back(x);
  if (pos.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(pos.begin(), pos.end());
  return *hi / *lo - 1.0;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

void write_outputs(const ExperimentConfig& cfg, RunManifest& m, const EvolutionRecord* rec) {
  if (cfg.output_dir.empty()) return;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  io::write_norms_csv(dir / "norms.csv", rec && rec->norms ? rec->norms->series() : NormSeries{cfg.diagnostics.k_max, {}});
  m.artifacts.push_back("norms.csv");
  if (rec) {
    for (Species sp : {Species::plus, Species::minus}) {
      const std::string tag = to_string(sp);
      io::write_state_dump(dir / ("initial_" + tag + ".bin"), rec->initial, sp);
      io::write_state_dump(dir / ("final_" + tag + ".bin"), rec->final, sp);
      m.artifacts.push_back("initial_" + tag + ".bin");
      m.artifacts.push_back("final_" + tag + ".bin");
      const auto& acc = rec->acc(sp);
      if (!acc.started()) continue;
      ScatteringField f = acc.field();
      if (auto it = m.constants.find("tail_" + tag); it != m.constants.end()) f.tail = it->second;
      const std::string name = "scattering_" + tag + "_" + to_string(f.direction) + ".bin";
      io::write_scattering(dir / name, f, cfg.diagnostics.k_max);
      m.artifacts.push_back(name);
      m.artifacts.push_back(name + ".json");
    }
  }
  m.artifacts.push_back("manifest.json");
  io::write_manifest(dir / "manifest.json", m, cfg);
}

class Stopwatch {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace

// ---------------------------------------------------------------------------
// Configuration

const char* to_string(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::one_sided: return "one_sided";
  case ExperimentKind::collision: return "collision";
  case ExperimentKind::rigidity_forward_backward: return "rigidity_forward_backward";
  case ExperimentKind::rigidity_mixed: return "rigidity_mixed";
  case ExperimentKind::amplitude_sweep: return "amplitude_sweep";
  case ExperimentKind::model1d: return "model1d";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::one_sided, ExperimentKind::collision, ExperimentKind::rigidity_forward_backward,
                 ExperimentKind::rigidity_mixed, ExperimentKind::amplitude_sweep, ExperimentKind::model1d}) {
    if (name == to_string(k)) return k;
  }
  throw RangeError("unknown experiment kind '" + name + "'");
}

std::uint64_t packet_seed(const ExperimentConfig& cfg, std::size_t i) {
  const std::uint64_t own = cfg.packets.at(i).polarization_seed;
  return own != 0 ? own : cfg.seed + i;
}

std::vector<double> packet_run_distances(const ExperimentConfig& cfg) {
  std::vector<double> out;
  const PacketSpec* first[2] = {first_packet(cfg, Species::plus), first_packet(cfg, Species::minus)};
  for (const auto& p : cfg.packets) {
    out.push_back(std::abs(p.center[2] - first[species_index(p.species)]->center[2]));
  }
  return out;
}

std::vector<ConfigProblem> config_problems(const ExperimentConfig& cfg) {
  std::vector<ConfigProblem> out;
  auto range = [&](std::string msg) { out.push_back({ConfigProblem::Kind::range, std::move(msg)}); };
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      range(e.what());
    }
  };
  guarded([&] { cfg.domain.validate(); });
  guarded([&] { WeightParams(cfg.weights.a, cfg.weights.delta); });
  guarded([&] { cfg.stepper.validate(); });
  if (!std::isfinite(cfg.stepper.t_end)) range("stepper: t_end must be finite");
  if (!(cfg.stepper.blowup_factor > 1.0)) range("stepper: blowup_factor must exceed 1");

  const auto& d = cfg.diagnostics;
  if (d.k_max < 0 || d.k_max > 4) range("diagnostics: k_max must lie in [0, 4]");
  if (d.diag_every < 1) range("diagnostics: diag_every must be >= 1");
  if (!(d.u_margin >= 0.0)) range("diagnostics: u_margin must be >= 0");
  if (!(d.tail_window > 0.0)) range("diagnostics: tail_window must be positive");
  if (!(d.checkpoint_every > 0.0)) range("diagnostics: checkpoint_every must be positive");

  if (is_3d(cfg.kind)) {
    if (cfg.packets.empty()) out.push_back({ConfigProblem::Kind::missing_key, "packets: at least one packet is required"});
    const bool domain_ok = [&] {
      try {
        cfg.domain.validate();
        return true;
      } catch (const Error&) {
        return false;
      }
    }();
    const std::vector<double> run = cfg.packets.empty() ? std::vector<double>{} : packet_run_distances(cfg);
    for (std::size_t i = 0; i < cfg.packets.size(); ++i) {
      const auto& p = cfg.packets[i];
      const std::string name = "packet " + std::to_string(i + 1);
      bool widths_ok = true;
      for (int a = 0; a < 3; ++a) {
        if (!(p.widths[a] > 0.0) || !std::isfinite(p.widths[a])) {
          range(name + ": widths must be positive");
          widths_ok = false;
          break;
        }
        if (!std::isfinite(p.center[a])) range(name + ": centre must be finite");
      }
      if (!(p.amplitude >= 0.0) || !std::isfinite(p.amplitude)) range(name + ": amplitude must be >= 0");
      if (widths_ok && domain_ok) {
        const double need = support_radius(p.widths[2]) + run[i];
        if (need > 0.5 * cfg.domain.L[2]) {
          out.push_back({ConfigProblem::Kind::margin,
                         name + ": x3 support " + fmt(support_radius(p.widths[2])) + " plus run distance " +
                             fmt(run[i]) + " exceeds L3/2 = " + fmt(0.5 * cfg.domain.L[2])});
        }
      }
    }
  }

  switch (cfg.kind) {
  case ExperimentKind::one_sided:
    for (const auto& p : cfg.packets)
      if (p.species == Species::minus && p.amplitude != 0.0) range("one_sided: z- packets must have amplitude 0");
    if (cfg.stepper.t_end == 0.0) out.push_back({ConfigProblem::Kind::missing_key, "stepper: t_end is required"});
    break;
  case ExperimentKind::rigidity_forward_backward:
  case ExperimentKind::rigidity_mixed:
    if (cfg.sweep.lambdas.empty()) range("sweep: lambdas must not be empty");
    for (double l : cfg.sweep.lambdas)
      if (!(l >= 0.0) || !std::isfinite(l)) range("sweep: lambdas must be >= 0");
    if (cfg.stepper.t_end < 0.0) range("stepper: rigidity runs take t_end > 0");
    break;
  case ExperimentKind::amplitude_sweep:
    if (cfg.sweep.eps_plus.empty() || cfg.sweep.eps_minus.empty()) range("sweep: eps_plus and eps_minus must not be empty");
    for (double e : cfg.sweep.eps_plus)
      if (!(e >= 0.0)) range("sweep: eps_plus entries must be >= 0");
    for (double e : cfg.sweep.eps_minus)
      if (!(e >= 0.0)) range("sweep: eps_minus entries must be >= 0");
    if (!first_packet(cfg, Species::plus) || !first_packet(cfg, Species::minus))
      range("amplitude_sweep: needs a z+ and a z- packet");
    break;
  case ExperimentKind::model1d: {
    const auto& m = cfg.model1d;
    if (!(m.L > 0.0)) range("model1d: L must be positive");
    if (m.n < 8 || m.n % 2 != 0) range("model1d: n must be even and >= 8");
    if (!(m.width > 0.0)) range("model1d: width must be positive");
    if (m.times.empty()) range("model1d: times must not be empty");
    break;
  }
  case ExperimentKind::collision: break;
  }
  return out;
}

void throw_problems(const std::vector<ConfigProblem>& problems) {
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p.message;
  switch (problems.front().kind) {
  case ConfigProblem::Kind::missing_key: throw MissingKey(msg);
  case ConfigProblem::Kind::margin: throw MarginViolation(msg);
  case ConfigProblem::Kind::range: break;
  }
  throw RangeError(msg);
}

void ExperimentConfig::validate() const { throw_problems(config_problems(*this)); }

// ---------------------------------------------------------------------------
// Manifest

bool RunManifest::all_passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

const Assertion* RunManifest::find(const std::string& name) const {
  for (const auto& a : assertions)
    if (a.name == name) return &a;
  return nullptr;
}

Assertion& RunManifest::check(const std::string& name, double value, double threshold, bool at_least,
                              std::string detail) {
  Assertion a;
  a.name = name;
  a.value = value;
  a.threshold = threshold;
  a.at_least = at_least;
  a.passed = std::isfinite(value) ? (at_least ? value >= threshold : value <= threshold) : (at_least && value > 0);
  a.detail = std::move(detail);
  assertions.push_back(std::move(a));
  return assertions.back();
}

// ---------------------------------------------------------------------------
// Runs

ElsasserState build_initial_state(const ExperimentConfig& cfg, double scale_plus, double scale_minus) {
  ElsasserState s(SpectralGrid::make(cfg.domain), WeightParams(cfg.weights.a, cfg.weights.delta));
  const std::vector<double> run = packet_run_distances(cfg);
  for (std::size_t i = 0; i < cfg.packets.size(); ++i) {
    PacketSpec p = cfg.packets[i];
    p.polarization_seed = packet_seed(cfg, i);
    p.amplitude *= p.species == Species::plus ? scale_plus : scale_minus;
    add_packet(s, p, run[i]);
  }
  s.guard.check(s.domain(), s.t);
  return s;
}

std::optional<double> collision_time(const ExperimentConfig& cfg) {
  const PacketSpec* p = first_packet(cfg, Species::plus);
  const PacketSpec* m = first_packet(cfg, Species::minus);
  if (!p || !m) return std::nullopt;
  // z+ centre moves as c+ - t, z- as c- + t.
  const double tc = 0.5 * (p->center[2] - m->center[2]);
  if (tc < 0.0) return std::nullopt;
  return tc;
}

double resolve_t_end(const ExperimentConfig& cfg) {
  if (cfg.stepper.t_end != 0.0) return cfg.stepper.t_end;
  const PacketSpec* p = first_packet(cfg, Species::plus);
  const PacketSpec* m = first_packet(cfg, Species::minus);
  const auto tc = collision_time(cfg);
  if (!p || !m || !tc) throw RangeError("stepper: t_end is required without a colliding pair");
  // Separation D where exp(-D^2 / 2(s1^2 + s2^2)) reaches the guard threshold; closing speed 2.
  const double s2 = p->widths[2] * p->widths[2] + m->widths[2] * m->widths[2];
  const double D = std::sqrt(2.0 * s2 * std::log(1.0 / WrapGuard{}.overlap_threshold));
  return *tc + 0.5 * D;
}

EvolutionRecord::EvolutionRecord(const ExperimentConfig& cfg, const ElsasserState& init, bool with_norms)
    : initial(init),
      final(init),
      scattering{ScatteringAccumulator(Species::plus, cfg.diagnostics.checkpoint_every,
                                       std::size_t(std::ceil(cfg.diagnostics.tail_window /
                                                             cfg.diagnostics.checkpoint_every)) + 2),
                 ScatteringAccumulator(Species::minus, cfg.diagnostics.checkpoint_every,
                                       std::size_t(std::ceil(cfg.diagnostics.tail_window /
                                                             cfg.diagnostics.checkpoint_every)) + 2)} {
  if (with_norms) {
    const double du = cfg.diagnostics.u_margin;
    norms.emplace(init, cfg.stepper.t_end, cfg.diagnostics.k_max, cfg.diagnostics.diag_every,
                  du > 0.0 ? std::optional<double>(du) : std::nullopt);
  }
}

EvolutionRecord evolve(const ExperimentConfig& cfg, const ElsasserState& initial, bool with_norms) {
  EvolutionRecord rec(cfg, initial, with_norms);
  StepperConfig sc = cfg.stepper;
  sc.direction = sc.t_end >= initial.t ? Direction::forward : Direction::backward;
  rec.plan = plan_steps(initial, sc);
  std::vector<Observer*> obs{&rec.scattering[0], &rec.scattering[1]};
  if (rec.norms) obs.push_back(&*rec.norms);
  say(cfg, "evolving to t = %g in %ld steps of %g", sc.t_end, rec.plan.steps, rec.plan.h);
  rec.final = advance(initial, sc, obs);
  return rec;
}

ElsasserState repose(const ElsasserState& s, double new_t) {
  ElsasserState out = s;
  out.weights = s.weights.with_a(s.weights.a + (s.t - new_t));
  out.guard = s.guard.rebased(s.t, new_t);
  out.t = new_t;
  return out;
}

RunManifest run_one_sided(const ExperimentConfig& cfg) {
  cfg.validate();
  const Stopwatch clock;
  RunManifest m = start_manifest(cfg);
  const auto& tol = cfg.tolerances;
  const ElsasserState s0 = build_initial_state(cfg);
  const EvolutionRecord rec = evolve(cfg, s0);
  const auto& series = rec.norms->series();

  const ElsasserState exact = propagate_linear(s0, rec.final.t - s0.t);
  m.check("one_sided.transport", state_distance(rec.final, exact), tol.transport);

  double grad_p = 0.0;
  for (const auto& x : series.samples) grad_p = std::max(grad_p, x.max_grad_p);
  m.check("one_sided.pressure", grad_p, tol.pressure_one_sided);

  for (Species sp : {Species::plus, Species::minus}) {
    const auto& acc = rec.acc(sp);
    const double d = weighted_distance(acc.field(), acc.initial());
    m.check(std::string("one_sided.scattering_") + to_string(sp), d, tol.scattering_one_sided);
  }

  // Every z+ surface crossing the whole packet carries E+(0)/sqrt(2).
  const double target = energy_norm(s0, Species::plus) / std::sqrt(2.0);
  const double flux = rec.norms->flux(Species::plus).sup();
  const double flux_err = target > 0.0 ? std::abs(flux - target) / target : std::abs(flux);
  m.check("one_sided.flux_saturation", flux_err, tol.flux_saturation);

  m.constants["E_plus_0"] = energy_norm(s0, Species::plus);
  m.constants["F_plus_sup"] = flux;
  m.constants["t_end"] = rec.final.t;
  m.wall_clock = clock.seconds();
  write_outputs(cfg, m, &rec);
  return m;
}

RunManifest run_collision(const ExperimentConfig& cfg_in) {
  cfg_in.validate();
  const Stopwatch clock;
  ExperimentConfig cfg = cfg_in;
  cfg.stepper.t_end = resolve_t_end(cfg_in);
  RunManifest m = start_manifest(cfg);
  const auto& tol = cfg.tolerances;
  const ElsasserState s0 = build_initial_state(cfg);
  const EvolutionRecord rec = evolve(cfg, s0);
  const auto& series = rec.norms->series();

  const Conserved c0 = conserved_quantities(s0);
  std::vector<double> energy, helicity;
  for (const auto& x : series.samples) {
    energy.push_back(x.energy);
    // measured against the energy: H may vanish.
    helicity.push_back(c0.energy > 0.0 ? (x.cross_helicity - c0.cross_helicity) / c0.energy : x.cross_helicity);
  }
  m.check("conservation.energy", sup_abs_relative(energy, c0.energy), tol.conservation);
  m.check("conservation.cross_helicity", sup_abs_relative(helicity, 0.0), tol.conservation);
  m.check("conservation.divergence", rec.norms->max_divergence(), tol.divergence);

  const double cp = main_estimate_constant(series, Species::plus);
  const double cm = main_estimate_constant(series, Species::minus);
  m.constants["C_meas_plus"] = cp;
  m.constants["C_meas_minus"] = cm;
  m.check("main_estimate", std::max(cp, cm), tol.main_estimate);

  const double t_early = collision_time(cfg).value_or(s0.t);
  m.constants["t_collision"] = t_early;
  const double sep = decay_bound(series, t_early, &NormSample::sep_ratio);
  const double p1 = decay_bound(series, t_early, &NormSample::p1_ratio);
  const double p2 = decay_bound(series, t_early, &NormSample::p2_ratio);
  m.check("decay.separation", sep, tol.decay_bound);
  m.check("decay.pressure_l1", p1, tol.decay_bound);
  m.check("decay.pressure_l2", p2, tol.decay_bound);

  std::array<double, 2> trace{};
  for (Species sp : {Species::plus, Species::minus}) {
    const std::string tag = to_string(sp);
    trace[species_index(sp)] = trace_identity_check(rec.acc(sp), rec.final);
    m.check("scattering.trace_" + tag, trace[species_index(sp)], tol.trace);
  }
  if (cfg.diagnostics.refine_dt) {
    ExperimentConfig fine = cfg;
    fine.stepper.dt = 0.5 * rec.plan.h * (rec.plan.h < 0 ? -1.0 : 1.0);
    const EvolutionRecord half = evolve(fine, s0, false);
    for (Species sp : {Species::plus, Species::minus}) {
      const std::string tag = to_string(sp);
      const double t2 = trace_identity_check(half.acc(sp), half.final);
      m.constants["trace_half_dt_" + tag] = t2;
      const double ratio = t2 > 0.0 ? trace[species_index(sp)] / t2 : inf;
      m.check("scattering.trace_refinement_" + tag, ratio, tol.trace_refinement, true,
              "trace error at dt over trace error at dt/2");
    }
  }
  for (Species sp : {Species::plus, Species::minus}) {
    const std::string tag = to_string(sp);
    const double tail = convergence_tail(rec.acc(sp), cfg.diagnostics.tail_window);
    m.constants["tail_" + tag] = tail;
    m.constants["integrand_final_" + tag] = rec.acc(sp).last_integrand_max();
    m.check("scattering.tail_" + tag, tail, tol.tail);
    const ScatteringField f = rec.acc(sp).field();
    bool finite = true;
    for (int k = 0; k <= cfg.diagnostics.k_max; ++k) {
      const double v = scattering_norm(f, k);
      m.constants["scattering_norm_" + tag + "_" + std::to_string(k)] = v;
      finite = finite && std::isfinite(v);
    }
    m.check("scattering.norms_finite_" + tag, finite ? 0.0 : 1.0, 0.0);
  }
  m.constants["t_end"] = rec.final.t;
  m.constants["dt"] = rec.plan.h;
  m.constants["energy_0"] = c0.energy;
  m.constants["cross_helicity_0"] = c0.cross_helicity;
  m.wall_clock = clock.seconds();
  write_outputs(cfg, m, &rec);
  return m;
}

RunManifest run_rigidity_forward_backward(const ExperimentConfig& cfg) {
  cfg.validate();
  const Stopwatch clock;
  RunManifest m = start_manifest(cfg);
  const auto& tol = cfg.tolerances;
  const double T = resolve_t_end(cfg);
  const int K = cfg.diagnostics.k_max;
  m.constants["T"] = T;

  std::vector<double> norm_T, norm_0, c_rig;
  double worst_recovery = 0.0;
  for (double lambda : cfg.sweep.lambdas) {
    const std::string tag = "lambda_" + fmt(lambda);
    const ElsasserState s0 = build_initial_state(cfg, lambda, lambda);
    say(cfg, "lambda = %g: forward to %g", lambda, T);
    const ElsasserState sT = advance(s0, stepper_to(cfg, s0.t, s0.t + T));
    // Data on Sigma_T with a = a0 + T, i.e. t' = 0.
    const ElsasserState posed = repose(sT, s0.t);
    say(cfg, "lambda = %g: backward to %g", lambda, s0.t - T);
    const ElsasserState back = advance(posed, stepper_to(cfg, posed.t, s0.t - T));
    // Back at t' = -T the weights coincide with the original ones.
    const ElsasserState recovered = repose(back, s0.t);
    const double rec_err = state_distance(recovered, s0);
    worst_recovery = std::max(worst_recovery, rec_err);
    const double eT = data_norm_total(posed, K);
    const double e0 = data_norm_total(recovered, K);
    norm_T.push_back(eT);
    norm_0.push_back(e0);
    const double c = eT > 0.0 ? e0 / eT : 0.0;
    c_rig.push_back(c);
    m.constants["norm_T_" + tag] = eT;
    m.constants["norm_0_" + tag] = e0;
    m.constants["C_rig_" + tag] = c;
    m.constants["recovery_" + tag] = rec_err;
  }
  m.check("rigidity1.recovery", worst_recovery, tol.recovery);
  const double lin = spread(c_rig);
  m.constants["C_rig_spread"] = lin;
  m.check("rigidity1.linearity", lin, tol.linearity, false, "max C_rig / min C_rig - 1");
  const double slope = loglog_slope(norm_T, norm_0);
  m.constants["exponent"] = slope;
  m.check("rigidity1.exponent", std::isfinite(slope) ? std::abs(slope - 1.0) : 0.0, tol.exponent, false,
          "|slope - 1| of log norm(0) against log norm(T)");
  m.wall_clock = clock.seconds();
  write_outputs(cfg, m, nullptr);
  return m;
}

RunManifest run_rigidity_mixed(const ExperimentConfig& cfg) {
  cfg.validate();
  const Stopwatch clock;
  RunManifest m = start_manifest(cfg);
  const auto& tol = cfg.tolerances;
  const double T = resolve_t_end(cfg);
  const int K = cfg.diagnostics.k_max;
  m.constants["T"] = T;

  std::vector<double> eps_p, eps_m, e0_p, e0_m, c;
  for (double lambda : cfg.sweep.lambdas) {
    const std::string tag = "lambda_" + fmt(lambda);
    const ElsasserState s0 = build_initial_state(cfg, lambda, lambda);
    say(cfg, "lambda = %g: forward leg to %g", lambda, s0.t + T);
    const ElsasserState fwd = repose(advance(s0, stepper_to(cfg, s0.t, s0.t + T)), s0.t);
    say(cfg, "lambda = %g: backward leg to %g", lambda, s0.t - T);
    const ElsasserState bwd = repose(advance(s0, stepper_to(cfg, s0.t, s0.t - T)), s0.t);
    // z- on Sigma_{+T} with a = +T and z+ on Sigma_{-T} with a = -T.
    const double em = data_norm(fwd, Species::minus, K);
    const double ep = data_norm(bwd, Species::plus, K);
    const double zp = data_norm(s0, Species::plus, K);
    const double zm = data_norm(s0, Species::minus, K);
    eps_p.push_back(ep);
    eps_m.push_back(em);
    e0_p.push_back(zp);
    e0_m.push_back(zm);
    const double ratio = ep + em > 0.0 ? (zp + zm) / (ep + em) : 0.0;
    c.push_back(ratio);
    m.constants["eps_plus_sq_" + tag] = ep;
    m.constants["eps_minus_sq_" + tag] = em;
    m.constants["E0_plus_" + tag] = zp;
    m.constants["E0_minus_" + tag] = zm;
    m.constants["C_" + tag] = ratio;
    m.constants["forward_E_plus_" + tag] = data_norm(fwd, Species::plus, K);
    m.constants["backward_E_minus_" + tag] = data_norm(bwd, Species::minus, K);
  }
  const double sp = loglog_slope(eps_p, e0_p);
  const double sm = loglog_slope(eps_m, e0_m);
  m.constants["exponent_plus"] = sp;
  m.constants["exponent_minus"] = sm;
  m.check("rigidity2.exponent_plus", std::isfinite(sp) ? std::abs(sp - 1.0) : 0.0, tol.exponent, false,
          "|slope - 1| of log E+(0) against log eps+^2");
  m.check("rigidity2.exponent_minus", std::isfinite(sm) ? std::abs(sm - 1.0) : 0.0, tol.exponent, false,
          "|slope - 1| of log E-(0) against log eps-^2");
  const double lin = spread(c);
  m.constants["C_spread"] = lin;
  m.check("rigidity2.stability", lin, tol.linearity, false, "max C / min C - 1");
  m.wall_clock = clock.seconds();
  write_outputs(cfg, m, nullptr);
  return m;
}

namespace {

class PlusEnergyTrace : public Observer {
public:
  void observe(const RecordPoint& rec) override { values.push_back(energy_norm(rec.state, Species::plus)); }
  std::vector<double> values;
};

} // namespace

RunManifest run_amplitude_sweep(const ExperimentConfig& cfg_in) {
  cfg_in.validate();
  const Stopwatch clock;
  ExperimentConfig cfg = cfg_in;
  cfg.stepper.t_end = resolve_t_end(cfg_in);
  RunManifest m = start_manifest(cfg);
  const auto& tol = cfg.tolerances;
  const double base_p = first_packet(cfg, Species::plus)->amplitude;
  const double base_m = first_packet(cfg, Species::minus)->amplitude;

  std::vector<double> eps_p = cfg.sweep.eps_plus, eps_m = cfg.sweep.eps_minus;
  std::sort(eps_p.begin(), eps_p.end());
  std::sort(eps_m.begin(), eps_m.end());
  // [i][j] for eps_p[i], eps_m[j]
  std::vector<std::vector<double>> growth(eps_p.size(), std::vector<double>(eps_m.size()));
  std::vector<std::vector<double>> e0(eps_p.size(), std::vector<double>(eps_m.size()));
  for (std::size_t i = 0; i < eps_p.size(); ++i) {
    for (std::size_t j = 0; j < eps_m.size(); ++j) {
      const double sp = base_p > 0.0 ? eps_p[i] / base_p : 0.0;
      const double sm = base_m > 0.0 ? eps_m[j] / base_m : 0.0;
      const ElsasserState s0 = build_initial_state(cfg, sp, sm);
      PlusEnergyTrace trace;
      Observer* obs[] = {&trace};
      say(cfg, "eps+ = %g, eps- = %g", eps_p[i], eps_m[j]);
      advance(s0, stepper_to(cfg, s0.t, cfg.stepper.t_end), obs);
      e0[i][j] = trace.values.front();
      growth[i][j] = sup_abs_relative(trace.values, e0[i][j]);
      const std::string tag = "eps_" + fmt(eps_p[i]) + "_" + fmt(eps_m[j]);
      m.constants["dE_plus_rel_" + tag] = growth[i][j];
      m.constants["E_plus_0_" + tag] = e0[i][j];
    }
  }

  double linear_limit = 0.0, band = 0.0, e0_ratio = 0.0;
  bool have_band = false, have_e0 = false;
  for (std::size_t i = 0; i < eps_p.size(); ++i) {
    for (std::size_t j = 0; j < eps_m.size(); ++j) {
      if (eps_m[j] == 0.0) linear_limit = std::max(linear_limit, growth[i][j]);
      for (std::size_t jj = 0; jj < eps_m.size(); ++jj) {
        if (eps_m[j] > 0.0 && std::abs(eps_m[jj] - 2.0 * eps_m[j]) <= 1e-12 * eps_m[jj] && growth[i][j] > 0.0) {
          band = std::max(band, std::abs(growth[i][jj] / growth[i][j] / 2.0 - 1.0));
          have_band = true;
        }
      }
      for (std::size_t ii = 0; ii < eps_p.size(); ++ii) {
        if (eps_p[i] > 0.0 && std::abs(eps_p[ii] - 2.0 * eps_p[i]) <= 1e-12 * eps_p[ii] && e0[i][j] > 0.0) {
          e0_ratio = std::max(e0_ratio, std::abs(e0[ii][j] / e0[i][j] / 4.0 - 1.0));
          have_e0 = true;
        }
      }
    }
  }
  if (std::find(eps_m.begin(), eps_m.end(), 0.0) != eps_m.end()) {
    m.check("sweep.linear_limit", linear_limit, tol.sweep_linear_limit);
  }
  if (have_band) m.check("sweep.doubling_eps_minus", band, tol.sweep_band, false, "|ratio/2 - 1|");
  if (have_e0) m.check("sweep.doubling_eps_plus", e0_ratio, 1e-6, false, "|E+(0) ratio/4 - 1|");
  double worst_exp = 0.0;
  for (std::size_t i = 0; i < eps_p.size(); ++i) {
    std::vector<double> x, y;
    for (std::size_t j = 0; j < eps_m.size(); ++j) {
      if (eps_m[j] > 0.0) {
        x.push_back(eps_m[j]);
        y.push_back(growth[i][j]);
      }
    }
    if (x.size() < 2) continue;
    const double s = loglog_slope(x, y);
    m.constants["exponent_eps_minus_at_" + fmt(eps_p[i])] = s;
    if (std::isfinite(s)) worst_exp = std::max(worst_exp, std::abs(s - 1.0));
  }
  m.check("sweep.exponent", worst_exp, tol.sweep_band, false, "|slope - 1| of log dE+ against log eps-");
  m.wall_clock = clock.seconds();
  write_outputs(cfg, m, nullptr);
  return m;
}

RunManifest run_model1d(const ExperimentConfig& cfg) {
  using namespace model1d;
  cfg.validate();
  const Stopwatch clock;
  RunManifest m = start_manifest(cfg);
  const auto& mc = cfg.model1d;
  const auto& tol = cfg.tolerances;
  const double A = mc.amplitude, B = mc.velocity_amplitude, w = mc.width;
  auto gauss = [w](double x) { return std::exp(-(x / w) * (x / w)); };
  const Wave1D wave = Wave1D::from_functions(mc.L, mc.n, [&](double x) { return A * gauss(x); },
                                             [&](double x) { return B * gauss(x); });
  const ScatteringFields1D f = scattering_1d(wave);

  // Lbar = phi1 - phi0', L = phi1 + phi0' with phi0' = -2x/w^2 A g.
  double analytic = 0.0;
  for (int i = 0; i < wave.n; ++i) {
    const double x = wave.x[i];
    const double d0 = -2.0 * x / (w * w) * A * gauss(x);
    analytic = std::max({analytic, std::abs(f.lbar_future[i] - (B * gauss(x) - d0)),
                         std::abs(f.l_future[i] - (B * gauss(x) + d0))});
  }
  m.check("model1d.analytic", analytic, tol.model1d_analytic);

  const RealArray zero = RealArray::Zero(wave.n);
  double rigidity = 0.0;
  bool logic = true;
  for (RigidityModel rm : {RigidityModel::model1, RigidityModel::model2}) {
    const RigidityOutcome z = rigidity_check_1d(mc.L, zero, zero, rm, tol.model1d_rigidity);
    rigidity = std::max(rigidity, z.max_reconstruction);
    logic = logic && z.holds;
    // Any nonzero field must not pass.
    const bool nonzero = f.lbar_future.abs().maxCoeff() > tol.model1d_rigidity ||
                         f.l_future.abs().maxCoeff() > tol.model1d_rigidity;
    const RigidityOutcome d = rigidity_check_1d(mc.L, f, rm, tol.model1d_rigidity);
    logic = logic && (d.holds != nonzero);
  }
  m.check("model1d.rigidity", rigidity, tol.model1d_rigidity);
  m.check("model1d.rigidity_logic", logic ? 0.0 : 1.0, 0.0);

  double trace = 0.0;
  for (double t : mc.times) {
    const NullDerivatives tr = characteristic_trace(wave, t);
    // The traces carry the t = 0 null derivatives.
    trace = std::max({trace, (tr.lbar - f.lbar_future).abs().maxCoeff(), (tr.l - f.l_future).abs().maxCoeff()});
  }
  m.check("model1d.trace", trace, tol.model1d_rigidity);

  if (!cfg.output_dir.empty()) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    std::ostringstream csv;
    csv.precision(17);
    csv << "x,phi0,phi1,lbar,l";
    for (std::size_t k = 0; k < mc.times.size(); ++k) csv << ",phi_t" << k;
    csv << '\n';
    std::vector<RealArray> evolved;
    for (double t : mc.times) evolved.push_back(dalembert_evolve(wave, t));
    for (int i = 0; i < wave.n; ++i) {
      csv << wave.x[i] << ',' << wave.phi0[i] << ',' << wave.phi1[i] << ',' << f.lbar_future[i] << ','
          << f.l_future[i];
      for (const auto& e : evolved) csv << ',' << e[i];
      csv << '\n';
    }
    io::write_atomic(dir / "model1d.csv", csv.str());
    m.artifacts.push_back("model1d.csv");
  }
  m.wall_clock = clock.seconds();
  write_outputs(cfg, m, nullptr);
  return m;
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
  case ExperimentKind::one_sided: return run_one_sided(cfg);
  case ExperimentKind::collision: return run_collision(cfg);
  case ExperimentKind::rigidity_forward_backward: return run_rigidity_forward_backward(cfg);
  case ExperimentKind::rigidity_mixed: return run_rigidity_mixed(cfg);
  case ExperimentKind::amplitude_sweep: return run_amplitude_sweep(cfg);
  case ExperimentKind::model1d: return run_model1d(cfg);
  }
  throw RangeError("unknown experiment kind");
}

TimeOrder measure_time_order(const ExperimentConfig& cfg, double dt) {
  const ElsasserState s0 = build_initial_state(cfg);
  auto run = [&](double h) {
    StepperConfig sc = stepper_to(cfg, s0.t, cfg.stepper.t_end);
    sc.dt = h;
    return advance(s0, sc);
  };
  const ElsasserState ref = run(dt / 8.0);
  TimeOrder out;
  out.error_dt = state_distance(run(dt), ref);
  out.error_half = state_distance(run(dt / 2.0), ref);
  out.ratio = out.error_half > 0.0 ? out.error_dt / out.error_half : inf;
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

} // namespace alfven
