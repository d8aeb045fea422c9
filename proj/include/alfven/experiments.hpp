#pragma once

// Named experiments: declarative configuration, the runs themselves and the
// manifest each one produces.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alfven/diagnostics.hpp"
#include "alfven/scattering.hpp"
#include "alfven/solver.hpp"
#include "alfven/state.hpp"

namespace alfven {

enum class ExperimentKind { one_sided, collision, rigidity_forward_backward, rigidity_mixed, amplitude_sweep, model1d };

const char* to_string(ExperimentKind k);
/// Throws RangeError on an unknown name.
ExperimentKind parse_experiment_kind(const std::string& name);

struct DiagnosticsConfig {
  int k_max = 2;
  /// Record points between norm samples.
  int diag_every = 1;
  /// Extra width added on both sides of the flux u lattice.
  double u_margin = 0.0;
  /// Window for the scattering convergence tail.
  double tail_window = 1.0;
  double checkpoint_every = 1.0;
  /// Repeat the scattering accumulation at dt/2 to measure its convergence.
  bool refine_dt = true;
};

struct SweepConfig {
  std::vector<double> lambdas{1.0, 0.5, 0.25};
  std::vector<double> eps_plus{0.025, 0.05};
  std::vector<double> eps_minus{0.0, 0.025, 0.05};
};

struct Model1DConfig {
  double L = 40.0;
  int n = 1024;
  /// Gaussian data phi0 = amplitude exp(-(x/width)^2), phi1 = velocity_amplitude exp(-(x/width)^2).
  double amplitude = 1.0;
  double width = 1.0;
  double velocity_amplitude = 0.0;
  /// Evolution times; multiples of L/n are evaluated without interpolation.
  std::vector<double> times{0.0, 2.5, 5.0};
};

/// Pass/fail thresholds; the defaults are the acceptance values.
struct Tolerances {
  double transport = 1e-10;
  double pressure_one_sided = 1e-12;
  double scattering_one_sided = 1e-10;
  double flux_saturation = 1e-6;
  double conservation = 1e-8;
  double divergence = 1e-12;
  double main_estimate = 4.0;
  double decay_bound = 4.0;
  double trace = 1e-6;
  double trace_refinement = 4.0;
  double tail = 1e-10;
  double recovery = 1e-8;
  double linearity = 0.2;
  double exponent = 0.2;
  double sweep_linear_limit = 1e-10;
  double sweep_band = 0.5;
  double model1d_rigidity = 1e-14;
  double model1d_analytic = 1e-12;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::collision;
  std::string output_dir;
  std::uint64_t seed = 1;
  DomainSpec domain;
  WeightParams weights;
  std::vector<PacketSpec> packets;
  StepperConfig stepper;
  DiagnosticsConfig diagnostics;
  SweepConfig sweep;
  Model1DConfig model1d;
  Tolerances tolerances;
  /// Source path, echoed into the manifest.
  std::string source;
  /// Progress lines on stderr.
  bool verbose = false;

  /// Throws the first problem's error type with every problem listed.
  void validate() const;
};

struct ConfigProblem {
  enum class Kind { missing_key, range, margin };
  Kind kind = Kind::range;
  std::string message;
};

/// All problems found in a configuration; empty when valid.
std::vector<ConfigProblem> config_problems(const ExperimentConfig& cfg);

/// Throws MissingKey, RangeError or MarginViolation (the first problem's
/// kind) with every message listed. No-op for an empty list.
void throw_problems(const std::vector<ConfigProblem>& problems);

/// Effective polarization seed of packet i: its own seed, or cfg.seed + i
/// when the packet's seed is 0.
std::uint64_t packet_seed(const ExperimentConfig& cfg, std::size_t i);

/// Distance a packet sits from the window anchor of its species; the first
/// packet of a species defines the anchor.
std::vector<double> packet_run_distances(const ExperimentConfig& cfg);

struct Assertion {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  /// Passing means value >= threshold rather than <=.
  bool at_least = false;
  std::string detail;
};

struct RunManifest {
  std::string kind;
  std::string version;
  std::string config_source;
  std::vector<std::uint64_t> seeds;
  double wall_clock = 0.0;
  std::vector<Assertion> assertions;
  std::map<std::string, double> constants;
  std::map<std::string, std::string> notes;
  std::vector<std::string> artifacts;

  bool all_passed() const;
  const Assertion* find(const std::string& name) const;
  /// Records a check of `value <= threshold` (or >= when `at_least`).
  Assertion& check(const std::string& name, double value, double threshold, bool at_least = false,
                   std::string detail = {});
};

/// The state described by the packet list with amplitudes scaled per species.
ElsasserState build_initial_state(const ExperimentConfig& cfg, double scale_plus = 1.0, double scale_minus = 1.0);

/// Collision time of the first plus and minus packets, or nullopt if they
/// never meet going forward.
std::optional<double> collision_time(const ExperimentConfig& cfg);

/// Run length: cfg.stepper.t_end when nonzero, otherwise the time at which
/// the colliding packets' overlap has fallen back to the guard threshold.
double resolve_t_end(const ExperimentConfig& cfg);

/// Everything kept from one evolution.
struct EvolutionRecord {
  EvolutionRecord(const ExperimentConfig& cfg, const ElsasserState& initial, bool with_norms);

  ElsasserState initial;
  ElsasserState final;
  /// Absent when norms were not requested.
  std::optional<NormObserver> norms;
  std::array<ScatteringAccumulator, 2> scattering;
  StepPlan plan;

  const ScatteringAccumulator& acc(Species s) const { return scattering[species_index(s)]; }
};

/// Evolves `initial` to cfg.stepper.t_end with scattering accumulators and,
/// when `with_norms`, the norm observer.
EvolutionRecord evolve(const ExperimentConfig& cfg, const ElsasserState& initial, bool with_norms = true);

/// The state at time s.t posed as data at t = new_t. The position parameter
/// moves by s.t - new_t so every weight keeps its value; the guard is rebased.
ElsasserState repose(const ElsasserState& s, double new_t);

RunManifest run_one_sided(const ExperimentConfig& cfg);
RunManifest run_collision(const ExperimentConfig& cfg);
RunManifest run_rigidity_forward_backward(const ExperimentConfig& cfg);
RunManifest run_rigidity_mixed(const ExperimentConfig& cfg);
RunManifest run_amplitude_sweep(const ExperimentConfig& cfg);
RunManifest run_model1d(const ExperimentConfig& cfg);

/// Dispatches on cfg.kind.
RunManifest run_experiment(const ExperimentConfig& cfg);

/// Error of the final state at dt and dt/2 against a dt/8 reference (max
/// norm over both species) and their ratio.
struct TimeOrder {
  double error_dt = 0.0;
  double error_half = 0.0;
  double ratio = 0.0;
};
TimeOrder measure_time_order(const ExperimentConfig& cfg, double dt);

/// Least-squares slope of log y against log x over the entries with x, y > 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace alfven
